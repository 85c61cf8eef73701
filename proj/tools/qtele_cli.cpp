// qtele: command-line driver for the homodyne teleportation simulations.

#include "qtele/experiment.hpp"
#include "qtele/record_io.hpp"
#include "qtele/transmon.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  bool debug_records = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "flat key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master seed (overrides the config)");
  cmd->add_option("--out", f.out, "output directory (overrides the config)");
  cmd->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--debug-records", f.debug_records, "write per-trajectory records and retrodiction rows");
}

qtele::ExperimentConfig resolve(const CommonFlags& f) {
  qtele::ExperimentConfig cfg = f.config_path.empty() ? qtele::parse_config("") : qtele::load_config(f.config_path);
  if (f.seed) cfg.protocol.seed = *f.seed;
  if (f.out) cfg.out_dir = *f.out;
  if (f.workers) cfg.workers = *f.workers;
  if (f.debug_records) cfg.debug_records = true;
  return cfg;
}

qtele::ExperimentConfig with_axis(qtele::ExperimentConfig cfg, qtele::SweepAxis axis) {
  if (cfg.axis != axis) {
    cfg.axis = axis;
    cfg.grid = qtele::default_grid(axis);
  }
  return cfg;
}

void print_decisions(std::ostream& out, const std::string& id, const qtele::Decisions& d) {
  out << "direct " << d.direct.label() << "\npqs    " << d.pqs.label() << (d.pqs_fallback ? " (fallback)" : "")
      << '\n';
  if (d.retrodiction) {
    out << qtele::kRetrodictionHeader << '\n' << qtele::retrodiction_row(id, *d.retrodiction) << '\n';
  }
}

int dump_trajectory(const qtele::ExperimentConfig& base, std::size_t state) {
  qtele::ProtocolConfig p = base.protocol;
  p.n_states = state + 1;
  p.n_trajectories_per_state = 1;
  const qtele::EnsembleResult ens = qtele::run_ensemble(p, base.workers, true);
  const auto& r = ens.runs[state];
  const std::string id = std::to_string(state) + "_0";
  std::filesystem::create_directories(base.out_dir);
  qtele::save_record(base.out_dir, id, *r.record);
  {
    std::ofstream retro(base.out_dir / ("retrodiction_" + id + ".csv"), std::ios::binary);
    retro << qtele::kRetrodictionHeader << '\n';
    if (r.retrodiction) retro << qtele::retrodiction_row(id, *r.retrodiction) << '\n';
  }
  qtele::Decisions d;
  d.direct = r.direct;
  d.pqs = r.pqs;
  d.pqs_fallback = r.fallback;
  d.retrodiction = r.retrodiction;
  std::cout << "record " << (base.out_dir / ("record_" + id + ".csv")).string() << '\n';
  print_decisions(std::cout, id, d);
  std::cout << "fidelity direct " << r.fidelity(qtele::Strategy::Direct) << "\nfidelity pqs    "
            << r.fidelity(qtele::Strategy::Pqs) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homodyne teleportation with past quantum state retrodiction", "qtele"};
  app.fallthrough();

  CommonFlags flags;
  auto* run = app.add_subcommand("run", "single parameter point");
  auto* sweep_eta = app.add_subcommand("sweep-eta", "fidelity versus detector efficiency");
  auto* sweep_time = app.add_subcommand("sweep-time", "fidelity versus total measuring time");
  auto* gate_calc = app.add_subcommand("gate-calc", "transmon calibration report");
  auto* dump = app.add_subcommand("dump-trajectory", "write one record and its retrodiction");
  auto* decide = app.add_subcommand("decide", "recompute both decisions from a saved record");
  for (auto* cmd : {run, sweep_eta, sweep_time, dump, decide}) add_common(cmd, flags);

  std::size_t state = 0;
  dump->add_option("--state", state, "input state index");
  std::string record_path;
  decide->add_option("--record", record_path, "record_<id>.csv written by dump-trajectory")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }

  try {
    if (gate_calc->parsed()) {
      const auto report = qtele::transmon::calibrate({});
      std::cout << qtele::transmon::format_report(report);
      return 0;
    }
    const qtele::ExperimentConfig cfg = resolve(flags);
    if (run->parsed()) {
      qtele::ExperimentConfig c = cfg;
      c.axis = qtele::SweepAxis::None;
      c.grid.clear();
      qtele::run_experiment(c, std::cout);
      return 0;
    }
    if (sweep_eta->parsed()) {
      qtele::run_experiment(with_axis(cfg, qtele::SweepAxis::Eta), std::cout);
      return 0;
    }
    if (sweep_time->parsed()) {
      qtele::run_experiment(with_axis(cfg, qtele::SweepAxis::Time), std::cout);
      return 0;
    }
    if (dump->parsed()) return dump_trajectory(cfg, state);
    if (decide->parsed()) {
      const qtele::HomodyneRecord rec = qtele::load_record(record_path);
      qtele::ProtocolConfig p = cfg.protocol;
      p.eta = rec.eta;
      p.kappa = rec.kappa;
      p.dt = rec.dt;
      if (rec.phase_boundaries.size() == 2) {
        p.total_time = static_cast<double>(rec.phase_boundaries[1]) * rec.dt;
        p.t_beta_fraction = static_cast<double>(rec.phase_boundaries[0]) / static_cast<double>(rec.phase_boundaries[1]);
      }
      const std::string id = std::filesystem::path(record_path).stem().string();
      print_decisions(std::cout, id.rfind("record_", 0) == 0 ? id.substr(7) : id, qtele::decide(rec, p));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
