#include "qtele/experiment.hpp"

#include "qtele/record_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace qtele {

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Eta:
      return "eta";
    case SweepAxis::Time:
      return "time";
    default:
      return "none";
  }
}

void ExperimentConfig::validate() const {
  protocol.validate();
  if (axis != SweepAxis::None && grid.empty()) throw std::invalid_argument("sweep requires a nonempty grid");
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
}

std::vector<double> default_grid(SweepAxis a) {
  switch (a) {
    case SweepAxis::Eta:
      return {0.2, 0.4, 0.6, 0.8, 1.0};
    case SweepAxis::Time:
      return {1.0, 2.0, 3.0};
    default:
      return {};
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::uint64_t parse_unsigned(std::string_view s) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected a nonnegative integer, got '" + std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("expected true/false, got '" + std::string(s) + "'");
}

SweepAxis parse_axis(std::string_view s) {
  s = trim(s);
  if (s == "none") return SweepAxis::None;
  if (s == "eta") return SweepAxis::Eta;
  if (s == "time" || s == "T") return SweepAxis::Time;
  throw std::invalid_argument("sweep must be none, eta or time; got '" + std::string(s) + "'");
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

std::vector<double> parse_grid(std::string_view text) {
  const auto tokens = split(trim(text), ',');
  std::vector<double> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] != "...") {
      out.push_back(parse_double(tokens[i]));
      continue;
    }
    if (out.size() < 2 || i + 1 != tokens.size() - 1) {
      throw std::invalid_argument("grid: '...' needs two leading values and one final value");
    }
    const double step = out[out.size() - 1] - out[out.size() - 2];
    const double stop = parse_double(tokens[i + 1]);
    if (!(step != 0) || (stop - out.back()) / step < 0) throw std::invalid_argument("grid: progression never reaches the end value");
    const double span = (stop - out.front()) / step;
    const double count = std::round(span);
    if (std::abs(span - count) > 1e-9 * std::max(1.0, std::abs(span))) {
      throw std::invalid_argument("grid: end value is not on the progression");
    }
    const double first = out.front();
    out.clear();
    for (long k = 0; k <= static_cast<long>(count); ++k) out.push_back(first + static_cast<double>(k) * step);
    out.back() = stop;
    return out;
  }
  if (out.empty()) throw std::invalid_argument("grid: empty");
  return out;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  ProtocolConfig& p = cfg.protocol;

  using Handler = std::function<void(std::string_view)>;
  const std::map<std::string, Handler, std::less<>> handlers = {
      {"beta", [&](auto v) { p.beta = parse_double(v); require(p.beta >= 0, "beta must be nonnegative"); }},
      {"kappa", [&](auto v) { p.kappa = parse_double(v); require(p.kappa > 0, "kappa must be positive"); }},
      {"chi_over_kappa", [&](auto v) { p.chi_over_kappa = parse_double(v); }},
      {"drive_over_chi", [&](auto v) { p.drive_over_chi = parse_double(v); }},
      {"T", [&](auto v) { p.total_time = parse_double(v); require(p.total_time > 0, "T must be positive"); }},
      {"t_beta_fraction",
       [&](auto v) {
         p.t_beta_fraction = parse_double(v);
         require(p.t_beta_fraction > 0 && p.t_beta_fraction < 1, "t_beta_fraction must lie in (0, 1)");
       }},
      {"t_w", [&](auto v) { p.t_wait = parse_double(v); require(p.t_wait >= 0, "t_w must be nonnegative"); }},
      {"eta", [&](auto v) { p.eta = parse_double(v); require(p.eta >= 0 && p.eta <= 1, "eta out of range [0, 1]"); }},
      {"n_fock", [&](auto v) { p.n_fock = static_cast<Index>(parse_unsigned(v)); require(p.n_fock >= 2, "n_fock must be at least 2"); }},
      {"dt", [&](auto v) { p.dt = parse_double(v); require(p.dt > 0, "dt must be positive"); }},
      {"seed", [&](auto v) { p.seed = parse_unsigned(v); }},
      {"n_states", [&](auto v) { p.n_states = parse_unsigned(v); require(p.n_states >= 1, "n_states must be at least 1"); }},
      {"n_trajectories",
       [&](auto v) {
         p.n_trajectories_per_state = parse_unsigned(v);
         require(p.n_trajectories_per_state >= 1, "n_trajectories must be at least 1");
       }},
      {"sweep", [&](auto v) { cfg.axis = parse_axis(v); }},
      {"grid", [&](auto v) { cfg.grid = parse_grid(v); }},
      {"workers", [&](auto v) { cfg.workers = parse_unsigned(v); require(cfg.workers >= 1, "workers must be at least 1"); }},
      {"out", [&](auto v) { cfg.out_dir = std::string(trim(v)); }},
      {"debug_records", [&](auto v) { cfg.debug_records = parse_bool(v); }},
  };

  std::size_t line_no = 0;
  std::size_t last_line = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = handlers.find(key);
    if (it == handlers.end()) throw ConfigError(line_no, "unknown key '" + std::string(key) + "'");
    try {
      it->second(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(line_no, std::string(key) + ": " + e.what());
    }
    last_line = line_no;
  }

  if (cfg.axis != SweepAxis::None && cfg.grid.empty()) cfg.grid = default_grid(cfg.axis);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(last_line, e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(last_line, e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void write_results_csv(std::ostream& out, const ResultTable& table) {
  out << kResultsHeader << '\n';
  for (const auto& r : table.rows) {
    out << r.axis << ',' << format_double(r.axis_value) << ',' << to_string(r.strategy) << ','
        << format_double(r.mean_fidelity) << ',' << format_double(r.std_error) << ',' << r.n << ',' << r.fallbacks
        << '\n';
  }
}

ResultTable read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kResultsHeader) {
    throw std::invalid_argument("results csv: unexpected header");
  }
  ResultTable t;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto c = split(line, ',');
    if (c.size() != 7) throw std::invalid_argument("results csv: expected 7 columns");
    ResultRow r;
    r.axis = std::string(c[0]);
    r.axis_value = parse_double(c[1]);
    r.strategy = strategy_from_string(c[2]);
    r.mean_fidelity = parse_double(c[3]);
    r.std_error = parse_double(c[4]);
    r.n = parse_unsigned(c[5]);
    r.fallbacks = parse_unsigned(c[6]);
    t.rows.push_back(std::move(r));
  }
  return t;
}

ResultTable table_from_sweep(SweepAxis axis, const std::vector<SweepPoint>& points) {
  ResultTable t;
  for (const auto& pt : points) {
    for (Strategy s : {Strategy::Direct, Strategy::Pqs}) {
      const auto& e = pt.estimate(s);
      t.rows.push_back({std::string(to_string(axis)), pt.value, s, e.mean, e.std_error, e.n, e.fallbacks});
    }
  }
  return t;
}

void print_summary(std::ostream& out, const ResultTable& table) {
  out << std::left << std::setw(6) << "axis" << std::setw(10) << "value" << std::setw(9) << "strategy"
      << std::setw(12) << "fidelity" << std::setw(11) << "stderr" << std::setw(7) << "n"
      << "fallbacks\n";
  for (const auto& r : table.rows) {
    out << std::left << std::setw(6) << r.axis << std::setw(10) << r.axis_value << std::setw(9)
        << to_string(r.strategy) << std::setw(12) << std::fixed << std::setprecision(5) << r.mean_fidelity
        << std::setw(11) << r.std_error << std::defaultfloat << std::setw(7) << r.n << r.fallbacks << '\n';
  }
}

namespace {

void write_debug(const std::filesystem::path& dir, const EnsembleResult& ens) {
  std::filesystem::create_directories(dir);
  std::ofstream traj(dir / "trajectories.csv", std::ios::binary);
  std::ofstream retro(dir / "retrodiction.csv", std::ios::binary);
  traj << "state,trajectory,direct,pqs,fallback,fidelity_direct,fidelity_pqs,max_top_population\n";
  retro << kRetrodictionHeader << '\n';
  for (const auto& r : ens.runs) {
    const std::string id = std::to_string(r.state_index) + "_" + std::to_string(r.trajectory_index);
    traj << r.state_index << ',' << r.trajectory_index << ',' << r.direct.label() << ',' << r.pqs.label() << ','
         << (r.fallback ? 1 : 0) << ',' << format_double(r.fidelity(Strategy::Direct)) << ','
         << format_double(r.fidelity(Strategy::Pqs)) << ',' << format_double(r.max_truncation_population) << '\n';
    if (r.retrodiction) retro << retrodiction_row(id, *r.retrodiction) << '\n';
    if (r.record) save_record(dir, id, *r.record);
  }
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);

  ExperimentOutput out;
  std::vector<double> grid = config.grid;
  if (config.axis == SweepAxis::None) grid = {0.0};

  std::vector<SweepPoint> points;
  for (double value : grid) {
    ProtocolConfig p = config.protocol;
    std::filesystem::path debug_dir = config.out_dir;
    if (config.axis == SweepAxis::Eta) p.eta = value;
    if (config.axis == SweepAxis::Time) p.total_time = value;
    if (config.axis != SweepAxis::None) {
      debug_dir /= std::string(to_string(config.axis)) + "_" + format_double(value);
      log << to_string(config.axis) << " = " << value << " ..." << std::endl;
    }
    const EnsembleResult ens = run_ensemble(p, config.workers, config.debug_records);
    if (config.debug_records) write_debug(debug_dir, ens);
    points.push_back({value, ens.estimates, ens.max_truncation_population});
    out.max_truncation_population = std::max(out.max_truncation_population, ens.max_truncation_population);
  }
  out.table = table_from_sweep(config.axis, points);

  std::ofstream csv(config.out_dir / "results.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + (config.out_dir / "results.csv").string());
  write_results_csv(csv, out.table);

  print_summary(log, out.table);
  if (out.max_truncation_population > 1e-6) {
    log << "warning: population in the top two Fock levels reached " << out.max_truncation_population
        << " (> 1e-6); increase n_fock\n";
  }
  return out;
}

}  // namespace qtele
