#pragma once

// Experiment configuration, orchestration and result tables behind the CLI.
//
// Config files are flat "key = value" text with '#' comments. Omitted keys take
// the defaults of ProtocolConfig (beta 2, chi 13.5 kappa, drive 2 chi,
// T_beta / T = 0.4, T = 2/kappa, T_w = 0.3/kappa, eta 1,
// kappa dt = 1e-3, 500 input states, n_fock 40).

#include "qtele/teleport.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qtele {

enum class SweepAxis { None, Eta, Time };

std::string_view to_string(SweepAxis a);

/// eta: 0.2..1.0 in steps of 0.2; time: T = 1, 2, 3 (units of 1/kappa).
std::vector<double> default_grid(SweepAxis a);

struct ExperimentConfig {
  ProtocolConfig protocol;
  std::filesystem::path out_dir = "out";
  SweepAxis axis = SweepAxis::None;
  std::vector<double> grid;
  std::size_t workers = 1;
  bool debug_records = false;

  void validate() const;
};

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : std::invalid_argument(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// "0.2,0.4,0.6" or an arithmetic progression written "0.1,0.2,...,1.0".
std::vector<double> parse_grid(std::string_view text);

struct ResultRow {
  std::string axis;
  double axis_value = 0;
  Strategy strategy = Strategy::Direct;
  double mean_fidelity = 0;
  double std_error = 0;
  std::size_t n = 0;
  std::size_t fallbacks = 0;

  bool operator==(const ResultRow&) const = default;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  bool operator==(const ResultTable&) const = default;
};

inline constexpr std::string_view kResultsHeader = "axis,axis_value,strategy,mean_fidelity,stderr,n,fallbacks";

void write_results_csv(std::ostream& out, const ResultTable& table);
ResultTable read_results_csv(std::istream& in);

ResultTable table_from_sweep(SweepAxis axis, const std::vector<SweepPoint>& points);

struct ExperimentOutput {
  ResultTable table;
  double max_truncation_population = 0;
};

/// Runs the configured experiment and writes results.csv (plus per-trajectory
/// records with debug_records) into out_dir. Progress and the summary go to `log`.
ExperimentOutput run_experiment(const ExperimentConfig& config, std::ostream& log);

void print_summary(std::ostream& out, const ResultTable& table);

}  // namespace qtele
