#include "qtele/record_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace qtele {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

void write_record_csv(std::ostream& out, const HomodyneRecord& record) {
  out << "t,J\n";
  for (std::size_t i = 0; i < record.samples.size(); ++i) {
    out << format_double(static_cast<double>(i) * record.dt) << ',' << format_double(record.samples[i]) << '\n';
  }
}

void write_record_meta(std::ostream& out, const HomodyneRecord& record) {
  out << "dt=" << format_double(record.dt) << '\n';
  out << "eta=" << format_double(record.eta) << '\n';
  out << "kappa=" << format_double(record.kappa) << '\n';
  if (!record.phase_boundaries.empty()) {
    const double t_beta = static_cast<double>(record.phase_end(0)) * record.dt;
    out << "t_beta=" << format_double(t_beta) << '\n';
    if (record.phase_boundaries.size() > 1) {
      const double t_m = static_cast<double>(record.phase_end(1) - record.phase_end(0)) * record.dt;
      out << "t_m=" << format_double(t_m) << '\n';
    }
  }
  out << "boundaries=";
  for (std::size_t i = 0; i < record.phase_boundaries.size(); ++i) {
    out << (i ? "," : "") << record.phase_boundaries[i];
  }
  out << '\n';
}

HomodyneRecord read_record(std::istream& csv, std::istream& meta) {
  HomodyneRecord r;
  std::map<std::string, std::string, std::less<>> kv;
  std::string line;
  while (std::getline(meta, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("record meta: malformed line '" + line + "'");
    kv[std::string(trim(t.substr(0, eq)))] = std::string(trim(t.substr(eq + 1)));
  }
  auto need = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument(std::string("record meta: missing key '") + key + "'");
    return it->second;
  };
  r.dt = parse_double(need("dt"));
  r.eta = parse_double(need("eta"));
  r.kappa = parse_double(need("kappa"));

  if (!std::getline(csv, line) || trim(line) != "t,J") {
    throw std::invalid_argument("record csv: expected header 't,J'");
  }
  while (std::getline(csv, line)) {
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto cols = split(t, ',');
    if (cols.size() != 2) throw std::invalid_argument("record csv: expected two columns");
    r.samples.push_back(parse_double(cols[1]));
  }

  if (const auto it = kv.find("boundaries"); it != kv.end() && !trim(it->second).empty()) {
    for (auto tok : split(it->second, ',')) {
      r.phase_boundaries.push_back(static_cast<std::size_t>(std::llround(parse_double(tok))));
    }
  } else if (kv.count("t_beta")) {
    const std::size_t b0 = step_count(parse_double(kv["t_beta"]), r.dt);
    r.phase_boundaries.push_back(b0);
    if (kv.count("t_m")) r.phase_boundaries.push_back(b0 + step_count(parse_double(kv["t_m"]), r.dt));
  }
  r.validate();
  return r;
}

void save_record(const std::filesystem::path& dir, const std::string& id, const HomodyneRecord& record) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / ("record_" + id + ".csv"), std::ios::binary);
  std::ofstream meta(dir / ("record_" + id + ".meta"), std::ios::binary);
  if (!csv || !meta) throw std::runtime_error("cannot write record files in " + dir.string());
  write_record_csv(csv, record);
  write_record_meta(meta, record);
}

HomodyneRecord load_record(const std::filesystem::path& csv_path) {
  std::filesystem::path meta_path = csv_path;
  meta_path.replace_extension(".meta");
  std::ifstream csv(csv_path, std::ios::binary);
  std::ifstream meta(meta_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot open " + csv_path.string());
  if (!meta) throw std::runtime_error("cannot open " + meta_path.string());
  return read_record(csv, meta);
}

std::string retrodiction_row(const std::string& trajectory_id, const RetrodictionResult& r) {
  std::ostringstream o;
  o << trajectory_id;
  for (double p : r.probabilities) o << ',' << format_double(p);
  o << ',' << r.argmax.label() << ',' << format_double(r.margin);
  return o.str();
}

RetrodictionResult parse_retrodiction_row(std::string_view row, std::string* trajectory_id) {
  const auto cols = split(trim(row), ',');
  if (cols.size() != 7) throw std::invalid_argument("retrodiction row: expected 7 columns");
  RetrodictionResult r;
  if (trajectory_id) *trajectory_id = std::string(cols[0]);
  for (std::size_t i = 0; i < 4; ++i) r.probabilities[i] = parse_double(cols[i + 1]);
  r.argmax = BellOutcome::from_label(trim(cols[5]));
  r.margin = parse_double(cols[6]);
  return r;
}

}  // namespace qtele
