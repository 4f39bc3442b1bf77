#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "dodgep/embedding.hpp"
#include "dodgep/mapper.hpp"
#include "dodgep/report.hpp"

namespace dodgep {

inline constexpr int kFormatVersion = 1;

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

// Embedding set file: JSON header line, then one JSON record per line.
void write_embedding_set(const EmbeddingSet& set, std::ostream& out);
void write_embedding_set(const EmbeddingSet& set, const std::filesystem::path& path);
EmbeddingSet read_embedding_set(std::istream& in);
EmbeddingSet read_embedding_set(const std::filesystem::path& path);

/// Throws NumericError naming the first record whose norm differs from 1
/// by more than `tolerance`.
void check_unit_norm(const EmbeddingSet& set, double tolerance = 1e-6);

enum class PairLabel { match, mismatch };

struct Pair {
  std::string id_a;
  std::string id_b;
  PairLabel label = PairLabel::mismatch;

  friend bool operator==(const Pair&, const Pair&) = default;
};

// Pair list: CSV with header id_a,id_b,label.
void write_pairs(const std::vector<Pair>& pairs, std::ostream& out);
void write_pairs(const std::vector<Pair>& pairs, const std::filesystem::path& path);
std::vector<Pair> read_pairs(std::istream& in);
std::vector<Pair> read_pairs(const std::filesystem::path& path);

/// Throws ConfigError naming the first id absent from `set`.
void require_resolvable(const std::vector<Pair>& pairs, const EmbeddingSet& set);

// Image tensor file: JSON header line, then one value per line.
void write_image(const ImageTensor& image, std::ostream& out);
void write_image(const ImageTensor& image, const std::filesystem::path& path);
ImageTensor read_image(std::istream& in);
ImageTensor read_image(const std::filesystem::path& path);

// Mapper weights: JSON header line, then W1, b1, W2, b2 one value per line
// (matrices row-major).
void write_mapper(const ToyMapper& mapper, std::ostream& out);
void write_mapper(const ToyMapper& mapper, const std::filesystem::path& path);
ToyMapper read_mapper(std::istream& in);
ToyMapper read_mapper(const std::filesystem::path& path);

enum class ReportFormat { json, csv };

ReportFormat parse_report_format(std::string_view text);
nlohmann::ordered_json report_to_json(const RunReport& report);
void write_report(const RunReport& report, std::ostream& out, ReportFormat format);
void write_report(const RunReport& report, const std::filesystem::path& path, ReportFormat format);

}  // namespace dodgep
