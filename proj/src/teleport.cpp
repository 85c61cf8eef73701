#include "qtele/teleport.hpp"

#include "qtele/parallel.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace qtele {

std::string_view to_string(Strategy s) { return s == Strategy::Direct ? "direct" : "pqs"; }

Strategy strategy_from_string(std::string_view s) {
  if (s == "direct") return Strategy::Direct;
  if (s == "pqs") return Strategy::Pqs;
  throw std::invalid_argument("unknown strategy '" + std::string(s) + "'");
}

std::array<PhaseSpec, 2> ProtocolConfig::phases() const {
  PhaseSpec field_probe{t_beta(), 0.0, 0.0, Complex(0, 0), 0.0};
  PhaseSpec qubit_probe{t_m(), chi_a(), 0.0, drive(), 0.0};
  return {field_probe, qubit_probe};
}

void ProtocolConfig::validate() const {
  if (!(beta >= 0)) throw std::invalid_argument("beta must be nonnegative");
  if (!(total_time > 0)) throw std::invalid_argument("T must be positive");
  if (!(t_beta_fraction > 0 && t_beta_fraction < 1)) throw std::invalid_argument("t_beta_fraction must lie in (0, 1)");
  if (!(t_wait >= 0 && t_wait < t_m())) throw std::invalid_argument("T_w must satisfy 0 <= T_w < T_m");
  if (n_fock < 2) throw std::invalid_argument("n_fock must be at least 2");
  if (n_states < 1) throw std::invalid_argument("n_states must be at least 1");
  if (n_trajectories_per_state < 1) throw std::invalid_argument("n_trajectories must be at least 1");
  check_truncation_bound(Complex(beta), n_fock);
  sme_params().validate();
  if (step_count(t_beta(), dt) == 0 || step_count(t_m(), dt) == 0) {
    throw std::invalid_argument("T_beta and T_m must each cover at least one step");
  }
}

Operator controlled_phase_unitary(Index n_fock) {
  const HilbertLayout layout({2, n_fock});
  CMatrix u = CMatrix::Identity(layout.dim(), layout.dim());
  for (Index n = 1; n < n_fock; n += 2) u(n_fock + n, n_fock + n) = -1.0;
  return {std::move(u), layout, "CP"};
}

Ket prepare_entangled_state(double beta, Index n_fock) {
  CVector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const Ket product = tensor(Ket(std::move(plus), HilbertLayout::qubit()), coherent_state(Complex(beta), n_fock));
  const Operator u = controlled_phase_unitary(n_fock);
  return Ket(u.matrix() * product.amplitudes(), product.layout()).normalized();
}

Ket apply_bell_gates(const Ket& psi_a, const Ket& phi_bc) {
  if (psi_a.layout().dim() != 2 || phi_bc.layout().size() != 2 || phi_bc.layout().factor(0) != 2) {
    throw std::invalid_argument("apply_bell_gates: expects a qubit and a (qubit, cavity) state");
  }
  const Index n_fock = phi_bc.layout().cavity_dim();
  const Ket state = tensor(psi_a, phi_bc);
  const HilbertLayout& layout = state.layout();

  // Controlled parity between A (factor 0) and the cavity (factor 2), then H on A.
  CVector v = state.amplitudes();
  for (Index b = 0; b < 2; ++b) {
    for (Index n = 1; n < n_fock; n += 2) v((2 + b) * n_fock + n) *= -1.0;
  }
  v = embed(hadamard(), 0, layout).matrix() * v;
  return {std::move(v), layout};
}

Operator choose_correction(BellOutcome outcome) {
  switch (outcome.index()) {
    case 0:
      return identity(HilbertLayout::qubit());
    case 1:
      return sigma_x();
    case 2:
      return sigma_z();
    default:
      return {sigma_z().matrix() * sigma_x().matrix(), HilbertLayout::qubit(), "sigma_z sigma_x"};
  }
}

double corrected_fidelity(const Ket& psi, const DensityOperator& rho_b, BellOutcome outcome) {
  const Operator correction = choose_correction(outcome);
  const CMatrix& c = correction.matrix();
  return fidelity(psi, DensityOperator(c * rho_b.matrix() * c.adjoint(), rho_b.layout()));
}

Decisions decide(const HomodyneRecord& record, const ProtocolConfig& config) {
  Decisions d;
  const int s_beta = integrate_s_beta(record);
  const int s_a = integrate_s_a(record, config.t_wait);
  d.direct = BellOutcome{s_a < 0 ? 1 : 0, s_beta};

  const auto phases = config.phases();
  const EffectMatrix e0 = propagate_backward(record, phases, config.n_fock);
  d.retrodiction = retrodict(uniform_bell_prior(config.beta, config.n_fock), e0,
                             build_bell_povm(config.beta, config.n_fock));
  if (d.retrodiction) {
    d.pqs = d.retrodiction->argmax;
  } else {
    d.pqs = d.direct;
    d.pqs_fallback = true;
  }
  return d;
}

ForwardRun simulate_record(const ProtocolConfig& config, const Ket& initial, Rng& rng) {
  config.validate();
  const SmeParams params = config.sme_params();
  HomodyneRecord record;
  record.dt = params.dt;
  record.eta = params.eta;
  record.kappa = params.kappa;

  DensityOperator rho = DensityOperator::pure(initial);
  // Nothing couples different qubit-A basis states, and neither the record nor
  // rho_B depends on their coherences.
  const Index half = rho.layout().dim() / 2;
  CMatrix dephased = rho.matrix();
  dephased.topRightCorner(half, half).setZero();
  dephased.bottomLeftCorner(half, half).setZero();
  rho = DensityOperator(std::move(dephased), rho.layout());
  double max_top = 0;
  for (const PhaseSpec& phase : config.phases()) {
    PhaseResult r = simulate_phase(rho, phase, params, rng);
    record.samples.insert(record.samples.end(), r.samples.begin(), r.samples.end());
    record.phase_boundaries.push_back(record.samples.size());
    max_top = std::max(max_top, r.max_truncation_population);
    rho = std::move(r.rho);
  }
  return {std::move(record), std::move(rho), max_top};
}

RunResult run_trajectory(const ProtocolConfig& config, const Ket& psi_a, Rng& rng) {
  const Ket initial = apply_bell_gates(psi_a, prepare_entangled_state(config.beta, config.n_fock));
  ForwardRun fwd = simulate_record(config, initial, rng);
  Decisions decisions = decide(fwd.record, config);
  const DensityOperator rho_b = partial_trace(fwd.rho, {1});

  RunResult r{psi_a, decisions, {}, std::move(fwd.record), fwd.max_truncation_population};
  for (Strategy s : {Strategy::Direct, Strategy::Pqs}) {
    r.fidelities[static_cast<std::size_t>(s)] = corrected_fidelity(psi_a, rho_b, decisions.chosen(s));
  }
  return r;
}

OracleResult run_projective_oracle(double beta, Index n_fock, const Ket& psi_a, Rng& rng) {
  const Ket state = apply_bell_gates(psi_a, prepare_entangled_state(beta, n_fock));
  const CVector& v = state.amplitudes();

  // Unnormalized B state left by projecting (A, C) onto |i>|X>.
  std::array<CVector, 4> branch;
  std::array<double, 4> weight{};
  for (BellOutcome o : BellOutcome::all()) {
    const CVector field = coherent_state(Complex(o.field_sign * beta), n_fock).amplitudes();
    CVector b(2);
    for (Index qb = 0; qb < 2; ++qb) {
      b(qb) = field.dot(v.segment((o.qubit * 2 + qb) * n_fock, n_fock));
    }
    weight[o.index()] = b.squaredNorm();
    branch[o.index()] = std::move(b);
  }
  std::discrete_distribution<std::size_t> pick(weight.begin(), weight.end());
  const BellOutcome outcome = BellOutcome::from_index(pick(rng));
  const CVector b = branch[outcome.index()].normalized();
  const DensityOperator rho_b(b * b.adjoint(), HilbertLayout::qubit());
  return {outcome, corrected_fidelity(psi_a, rho_b, outcome)};
}

FidelityEstimate summarize(std::span<const double> fidelities, std::size_t fallbacks) {
  FidelityEstimate e;
  e.n = fidelities.size();
  e.fallbacks = fallbacks;
  if (e.n == 0) return e;
  e.mean = std::accumulate(fidelities.begin(), fidelities.end(), 0.0) / static_cast<double>(e.n);
  if (e.n > 1) {
    double ss = 0;
    for (double f : fidelities) ss += (f - e.mean) * (f - e.mean);
    e.std_error = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
  }
  return e;
}

Ket input_state(std::uint64_t seed, std::size_t state_index) {
  Rng rng = make_stream(seed, {0, state_index});
  return haar_random_qubit(rng);
}

EnsembleResult run_ensemble(const ProtocolConfig& config, std::size_t workers, bool keep_records) {
  config.validate();
  const std::size_t per_state = config.n_trajectories_per_state;
  const std::size_t total = config.n_states * per_state;

  EnsembleResult out;
  out.runs.resize(total);
  parallel_for(total, workers, [&](std::size_t i) {
    const std::size_t s = i / per_state;
    const std::size_t t = i % per_state;
    const Ket psi = input_state(config.seed, s);
    Rng rng = make_stream(config.seed, {1, s, t});
    RunResult r = run_trajectory(config, psi, rng);

    TrajectorySummary& sum = out.runs[i];
    sum.state_index = s;
    sum.trajectory_index = t;
    sum.direct = r.decisions.direct;
    sum.pqs = r.decisions.pqs;
    sum.fallback = r.decisions.pqs_fallback;
    sum.fidelities = r.fidelities;
    sum.retrodiction = r.decisions.retrodiction;
    sum.max_truncation_population = r.max_truncation_population;
    if (keep_records) sum.record = std::move(r.record);
  });

  std::size_t fallbacks = 0;
  for (Strategy s : {Strategy::Direct, Strategy::Pqs}) {
    std::vector<double> f;
    f.reserve(total);
    for (const auto& run : out.runs) f.push_back(run.fidelity(s));
    if (s == Strategy::Pqs) {
      for (const auto& run : out.runs) fallbacks += run.fallback ? 1 : 0;
    }
    out.estimates[static_cast<std::size_t>(s)] = summarize(f, s == Strategy::Pqs ? fallbacks : 0);
  }
  for (const auto& run : out.runs) {
    out.max_truncation_population = std::max(out.max_truncation_population, run.max_truncation_population);
  }
  return out;
}

FidelityEstimate estimate_protocol_fidelity(const ProtocolConfig& config, Strategy strategy, std::size_t workers) {
  return run_ensemble(config, workers).estimate(strategy);
}

namespace {

template <typename Setter>
std::vector<SweepPoint> sweep(const ProtocolConfig& base, std::span<const double> grid, std::size_t workers,
                              Setter set) {
  if (grid.empty()) throw std::invalid_argument("sweep: grid must be nonempty");
  std::vector<SweepPoint> points;
  points.reserve(grid.size());
  for (double value : grid) {
    ProtocolConfig c = base;
    set(c, value);
    const EnsembleResult r = run_ensemble(c, workers);
    points.push_back({value, r.estimates, r.max_truncation_population});
  }
  return points;
}

}  // namespace

std::vector<SweepPoint> sweep_efficiency(const ProtocolConfig& config, std::span<const double> etas,
                                         std::size_t workers) {
  return sweep(config, etas, workers, [](ProtocolConfig& c, double v) { c.eta = v; });
}

std::vector<SweepPoint> sweep_time(const ProtocolConfig& config, std::span<const double> total_times,
                                   std::size_t workers) {
  return sweep(config, total_times, workers, [](ProtocolConfig& c, double v) { c.total_time = v; });
}

}  // namespace qtele
