#include "dodgep/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace dodgep {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double v) {
  if (!std::isfinite(v)) throw NumericError("cannot serialize a non-finite value");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  writer(out);
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

json parse_json_line(const std::string& text, std::size_t line_no) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
  }
}

// Reads the header line and checks the format tag and version.
json read_header(std::istream& in, std::string_view fmt) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header line", 1);
  json header = parse_json_line(line, 1);
  if (!header.is_object() || !header.contains("fmt") || header["fmt"] != fmt) {
    throw ParseError("expected a header with \"fmt\":\"" + std::string(fmt) + "\"", 1);
  }
  if (!header.contains("v") || !header["v"].is_number_integer()) {
    throw ParseError("header lacks an integer version \"v\"", 1);
  }
  if (header["v"].get<int>() != kFormatVersion) {
    throw ParseError("unsupported format version " + header["v"].dump(), 1);
  }
  return header;
}

template <typename T>
T header_field(const json& header, const char* key) {
  if (!header.contains(key)) throw ParseError(std::string("header lacks \"") + key + "\"", 1);
  try {
    return header[key].get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("header field \"") + key + "\" has the wrong type", 1);
  }
}

double parse_number(const std::string& text, std::size_t line_no) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ParseError("expected a decimal number, got '" + text + "'", line_no);
  }
  if (!std::isfinite(v)) throw ParseError("non-finite value '" + text + "'", line_no);
  return v;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace

// ---------------------------------------------------------------- embeddings

void write_embedding_set(const EmbeddingSet& set, std::ostream& out) {
  ordered_json header;
  header["fmt"] = "emb";
  header["v"] = kFormatVersion;
  header["p"] = set.dimension();
  header["n"] = set.size();
  header["role"] = std::string(to_string(set.role()));
  out << header.dump() << '\n';
  for (const auto& r : set.records()) {
    out << "{\"id\":" << json(r.id).dump() << ",\"label\":" << json(r.label).dump()
        << ",\"vec\":[";
    for (Eigen::Index i = 0; i < r.vector.size(); ++i) {
      if (i) out << ',';
      out << format_double(r.vector(i));
    }
    out << "]}\n";
  }
}

void write_embedding_set(const EmbeddingSet& set, const std::filesystem::path& path) {
  write_file(path, [&](std::ostream& out) { write_embedding_set(set, out); });
}

EmbeddingSet read_embedding_set(std::istream& in) {
  const json header = read_header(in, "emb");
  const int p = header_field<int>(header, "p");
  const auto n = header_field<std::size_t>(header, "n");
  const auto role_text = header_field<std::string>(header, "role");
  if (p < 1) throw ParseError("dimension p must be positive", 1);

  SetRole role;
  try {
    role = parse_role(role_text);
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), 1);
  }
  EmbeddingSet set(role, p);

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") {
      throw ParseError("empty line inside the record body", line_no);
    }
    const json rec = parse_json_line(line, line_no);
    if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() ||
        !rec.contains("label") || !rec["label"].is_string() || !rec.contains("vec") ||
        !rec["vec"].is_array()) {
      throw ParseError("record needs string \"id\", string \"label\" and array \"vec\"", line_no);
    }
    const auto& vec = rec["vec"];
    const auto id = rec["id"].get<std::string>();
    if (vec.size() != static_cast<std::size_t>(p)) {
      throw ParseError("record '" + id + "' has " + std::to_string(vec.size()) +
                           " components, header declares p=" + std::to_string(p),
                       line_no);
    }
    EmbeddingVector v(p);
    for (int i = 0; i < p; ++i) {
      if (!vec[static_cast<std::size_t>(i)].is_number()) {
        throw ParseError("component " + std::to_string(i) + " of '" + id + "' is not a number",
                         line_no);
      }
      v(i) = vec[static_cast<std::size_t>(i)].get<double>();
      if (!std::isfinite(v(i))) {
        throw ParseError("component " + std::to_string(i) + " of '" + id + "' is not finite",
                         line_no);
      }
    }
    try {
      set.add(id, rec["label"].get<std::string>(), std::move(v));
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (set.size() != n) {
    throw ParseError("header declares n=" + std::to_string(n) + " but the body has " +
                         std::to_string(set.size()) + " records",
                     line_no);
  }
  return set;
}

EmbeddingSet read_embedding_set(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_embedding_set(in);
}

void check_unit_norm(const EmbeddingSet& set, double tolerance) {
  for (const auto& r : set.records()) {
    const double norm = r.vector.norm();
    if (std::abs(norm - 1.0) > tolerance) {
      throw NumericError("record '" + r.id + "' has norm " + format_double(norm) +
                         ", expected a unit vector");
    }
  }
}

// --------------------------------------------------------------------- pairs

void write_pairs(const std::vector<Pair>& pairs, std::ostream& out) {
  out << "id_a,id_b,label\n";
  for (const auto& p : pairs) {
    out << csv_field(p.id_a) << ',' << csv_field(p.id_b) << ','
        << (p.label == PairLabel::match ? "match" : "mismatch") << '\n';
  }
}

void write_pairs(const std::vector<Pair>& pairs, const std::filesystem::path& path) {
  write_file(path, [&](std::ostream& out) { write_pairs(pairs, out); });
}

std::vector<Pair> read_pairs(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing CSV header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id_a,id_b,label") throw ParseError("expected header 'id_a,id_b,label'", 1);
  std::vector<Pair> pairs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3) throw ParseError("expected 3 fields", line_no);
    Pair p{fields[0], fields[1], PairLabel::match};
    if (fields[2] == "match") {
      p.label = PairLabel::match;
    } else if (fields[2] == "mismatch") {
      p.label = PairLabel::mismatch;
    } else {
      throw ParseError("label must be 'match' or 'mismatch', got '" + fields[2] + "'", line_no);
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<Pair> read_pairs(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_pairs(in);
}

void require_resolvable(const std::vector<Pair>& pairs, const EmbeddingSet& set) {
  std::unordered_set<std::string> ids;
  for (const auto& r : set.records()) ids.insert(r.id);
  for (const auto& p : pairs) {
    for (const auto* id : {&p.id_a, &p.id_b}) {
      if (!ids.contains(*id)) throw ConfigError("pair id '" + *id + "' is not in the embedding set");
    }
  }
}

// -------------------------------------------------------------------- images

void write_image(const ImageTensor& image, std::ostream& out) {
  out << "{\"fmt\":\"img\",\"v\":1,\"c\":3,\"m\":" << image.side() << ",\"lo\":-1.0,\"hi\":1.0}\n";
  for (Eigen::Index i = 0; i < image.size(); ++i) out << format_double(image.values()(i)) << '\n';
}

void write_image(const ImageTensor& image, const std::filesystem::path& path) {
  write_file(path, [&](std::ostream& out) { write_image(image, out); });
}

ImageTensor read_image(std::istream& in) {
  const json header = read_header(in, "img");
  const int c = header_field<int>(header, "c");
  const int m = header_field<int>(header, "m");
  const double lo = header_field<double>(header, "lo");
  const double hi = header_field<double>(header, "hi");
  if (c != ImageTensor::kChannels) throw ParseError("only 3-channel images are supported", 1);
  if (m < 1) throw ParseError("side m must be positive", 1);
  if (lo != -1.0 || hi != 1.0) throw ParseError("value range must be [-1, 1]", 1);

  const Eigen::Index count = static_cast<Eigen::Index>(c) * m * m;
  Eigen::VectorXd values(count);
  std::string line;
  std::size_t line_no = 1;
  Eigen::Index i = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (i == count) throw ParseError("more values than 3*m*m", line_no);
    const double v = parse_number(line, line_no);
    if (v < lo || v > hi) throw ParseError("value " + line + " outside [-1, 1]", line_no);
    values(i++) = v;
  }
  if (i != count) {
    throw ParseError("expected " + std::to_string(count) + " values, found " + std::to_string(i),
                     line_no);
  }
  return ImageTensor(m, std::move(values));
}

ImageTensor read_image(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_image(in);
}

// -------------------------------------------------------------------- mapper

void write_mapper(const ToyMapper& mapper, std::ostream& out) {
  const auto& s = mapper.shape();
  out << "{\"fmt\":\"mapper\",\"v\":1,\"m\":" << s.side << ",\"h\":" << s.hidden
      << ",\"p\":" << s.dimension << ",\"seed\":" << mapper.seed() << "}\n";
  const auto& w = mapper.weights();
  auto dump_matrix = [&](const Eigen::MatrixXd& a) {
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index c = 0; c < a.cols(); ++c) out << format_double(a(r, c)) << '\n';
  };
  dump_matrix(w.w1);
  dump_matrix(w.b1);
  dump_matrix(w.w2);
  dump_matrix(w.b2);
}

void write_mapper(const ToyMapper& mapper, const std::filesystem::path& path) {
  write_file(path, [&](std::ostream& out) { write_mapper(mapper, out); });
}

ToyMapper read_mapper(std::istream& in) {
  const json header = read_header(in, "mapper");
  MapperShape shape{header_field<int>(header, "m"), header_field<int>(header, "h"),
                    header_field<int>(header, "p")};
  const auto seed = header_field<std::uint64_t>(header, "seed");
  if (shape.side < 1 || shape.hidden < 1 || shape.dimension < 1) {
    throw ParseError("mapper dimensions must be positive", 1);
  }
  const Eigen::Index in_size = 3LL * shape.side * shape.side;
  std::string line;
  std::size_t line_no = 1;
  auto fill = [&](Eigen::MatrixXd& a, Eigen::Index rows, Eigen::Index cols) {
    a.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!std::getline(in, line)) throw ParseError("truncated weight body", line_no + 1);
        a(r, c) = parse_number(line, ++line_no);
      }
    }
  };
  MapperWeights w;
  Eigen::MatrixXd b1, b2;
  fill(w.w1, shape.hidden, in_size);
  fill(b1, shape.hidden, 1);
  fill(w.w2, shape.dimension, shape.hidden);
  fill(b2, shape.dimension, 1);
  w.b1 = b1.col(0);
  w.b2 = b2.col(0);
  if (std::getline(in, line)) throw ParseError("trailing data after the weights", line_no + 1);
  return ToyMapper(shape, std::move(w), seed);
}

ToyMapper read_mapper(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_mapper(in);
}

// ------------------------------------------------------------------- reports

std::optional<double> RunReport::mean_coverage(const std::string& label, int phase,
                                               SetRole role) const {
  for (const auto& m : metrics) {
    if (m.label == label && m.phase == phase && m.role == role && m.repetition == "mean") {
      return m.coverage;
    }
  }
  return std::nullopt;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "json") return ReportFormat::json;
  if (text == "csv") return ReportFormat::csv;
  throw ConfigError("report format must be json or csv, got '" + std::string(text) + "'");
}

ordered_json report_to_json(const RunReport& report) {
  ordered_json j;
  j["fmt"] = "report";
  j["v"] = kFormatVersion;
  j["kind"] = report.kind;
  j["seed"] = report.seed;
  j["data_source"] = report.data_source;
  j["config"] = report.config;
  j["notes"] = report.notes;

  ordered_json metrics = ordered_json::array();
  for (const auto& m : report.metrics) {
    ordered_json row;
    row["label"] = m.label;
    row["repetition"] = m.repetition;
    row["phase"] = m.phase;
    row["role"] = std::string(to_string(m.role));
    row["coverage"] = m.coverage;
    row["matched"] = m.matched;
    row["total"] = m.total;
    metrics.push_back(std::move(row));
  }
  j["metrics"] = std::move(metrics);

  ordered_json table = ordered_json::array();
  for (const auto& t : report.table) {
    ordered_json row;
    row["axis"] = t.axis;
    row["value"] = t.value;
    row["increase_percent"] = t.increase_percent ? ordered_json(*t.increase_percent) : ordered_json();
    row["phase"] = t.phase;
    row["match_coverage"] = t.match_coverage ? ordered_json(*t.match_coverage) : ordered_json();
    row["dodge_coverage"] = t.dodge_coverage ? ordered_json(*t.dodge_coverage) : ordered_json();
    row["unseen_coverage"] = t.unseen_coverage ? ordered_json(*t.unseen_coverage) : ordered_json();
    table.push_back(std::move(row));
  }
  j["table"] = std::move(table);

  ordered_json inversions = ordered_json::array();
  for (const auto& s : report.inversions) {
    ordered_json row;
    row["label"] = s.label;
    row["repetition"] = s.repetition;
    row["cluster"] = s.cluster;
    row["initial_distance"] = s.initial_distance;
    row["final_distance"] = s.final_distance;
    row["max_deviation"] = s.max_deviation;
    inversions.push_back(std::move(row));
  }
  j["inversions"] = std::move(inversions);

  ordered_json histories = ordered_json::array();
  for (const auto& h : report.histories) {
    ordered_json row;
    row["label"] = h.label;
    row["repetition"] = h.repetition;
    row["cluster"] = h.cluster;
    row["best_fitness"] = h.best_fitness;
    histories.push_back(std::move(row));
  }
  j["histories"] = std::move(histories);
  return j;
}

void write_report(const RunReport& report, std::ostream& out, ReportFormat format) {
  if (format == ReportFormat::json) {
    out << report_to_json(report).dump(2) << '\n';
    return;
  }
  out << "label,repetition,phase,role,coverage,matched,total\n";
  for (const auto& m : report.metrics) {
    out << csv_field(m.label) << ',' << csv_field(m.repetition) << ',' << m.phase << ','
        << to_string(m.role) << ',' << format_double(m.coverage) << ',' << m.matched << ','
        << m.total << '\n';
  }
}

void write_report(const RunReport& report, const std::filesystem::path& path, ReportFormat format) {
  write_file(path, [&](std::ostream& out) { write_report(report, out, format); });
}

}  // namespace dodgep
