#include "qtele/sme.hpp"

#include "branch_dynamics.hpp"

#include <cmath>
#include <random>

namespace qtele {

void PhaseSpec::validate() const {
  if (!(duration >= 0) || !std::isfinite(duration)) {
    throw std::invalid_argument("PhaseSpec: duration must be finite and nonnegative");
  }
  if (!std::isfinite(chi_a) || !std::isfinite(chi_b) || !std::isfinite(drive.real()) ||
      !std::isfinite(drive.imag()) || !std::isfinite(lo_phase)) {
    throw std::invalid_argument("PhaseSpec: couplings must be finite");
  }
}

void SmeParams::validate() const {
  if (!(kappa > 0)) throw std::invalid_argument("SmeParams: kappa must be positive");
  if (!(eta >= 0 && eta <= 1)) throw std::invalid_argument("SmeParams: eta must lie in [0, 1]");
  if (!(dt > 0)) throw std::invalid_argument("SmeParams: dt must be positive");
  if (kappa * dt > 0.01 + 1e-15) throw std::invalid_argument("SmeParams: kappa * dt must not exceed 0.01");
}

void HomodyneRecord::validate() const {
  if (!(dt > 0)) throw std::invalid_argument("HomodyneRecord: dt must be positive");
  std::size_t prev = 0;
  for (std::size_t i = 0; i < phase_boundaries.size(); ++i) {
    const std::size_t b = phase_boundaries[i];
    if ((i > 0 && b <= prev) || b > samples.size()) {
      throw std::invalid_argument("HomodyneRecord: phase boundaries must be strictly increasing and in range");
    }
    prev = b;
  }
}

std::size_t step_count(double duration, double dt) {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

Operator build_hamiltonian(const PhaseSpec& phase, const HilbertLayout& layout) {
  phase.validate();
  const Index n_fock = layout.cavity_dim();
  const std::size_t qubits = layout.cavity_index();
  for (std::size_t q = 0; q < qubits; ++q) {
    if (layout.factor(q) != 2) throw std::invalid_argument("build_hamiltonian: register factors must be qubits");
  }
  if (qubits < 2 && phase.chi_b != 0) {
    throw std::invalid_argument("build_hamiltonian: chi_b set but the layout has no qubit B");
  }

  const auto a = embed(fock_annihilation(n_fock), layout.cavity_index(), layout).matrix();
  const auto number = embed(number_operator(n_fock), layout.cavity_index(), layout).matrix();
  CMatrix h = phase.drive * a.adjoint() + std::conj(phase.drive) * a;
  const double chi[2] = {phase.chi_a, phase.chi_b};
  for (std::size_t q = 0; q < std::min<std::size_t>(qubits, 2); ++q) {
    if (chi[q] == 0) continue;
    h += chi[q] * (embed(sigma_z(), q, layout).matrix() * number);
  }
  return {std::move(h), layout, "H"};
}

StepResult sme_step(const DensityOperator& rho, const Operator& hamiltonian, const SmeParams& params, double dW,
                    double lo_phase) {
  if (!(rho.layout() == hamiltonian.layout())) {
    throw std::invalid_argument("sme_step: state and Hamiltonian layouts differ");
  }
  const detail::BranchDynamics dynamics(hamiltonian, params, lo_phase);
  CMatrix m = rho.matrix();
  const double j = dynamics.forward(m, dW);
  return {DensityOperator(std::move(m), rho.layout()), j};
}

PhaseResult simulate_phase(const DensityOperator& rho0, const PhaseSpec& phase, const SmeParams& params, Rng& rng) {
  phase.validate();
  params.validate();
  const std::size_t steps = step_count(phase.duration, params.dt);
  if (steps == 0) {
    return {rho0, {}, top_fock_population(rho0)};
  }
  const detail::BranchDynamics dynamics(detail::dispersive_model(phase, rho0.layout(), params.kappa), params,
                                        phase.lo_phase);
  std::normal_distribution<double> noise(0.0, std::sqrt(params.dt));

  CMatrix m = rho0.matrix();
  dynamics.to_frame(m);
  std::vector<double> samples;
  samples.reserve(steps);
  double max_top = dynamics.top_population(m);
  for (std::size_t s = 0; s < steps; ++s) {
    samples.push_back(dynamics.forward(m, noise(rng)));
    max_top = std::max(max_top, dynamics.top_population(m));
  }
  dynamics.from_frame(m);
  max_top = std::max(max_top, dynamics.top_population(m));
  return {DensityOperator(std::move(m), rho0.layout()), std::move(samples), max_top};
}

double integrated_signal(const HomodyneRecord& record, std::size_t begin, std::size_t end) {
  double acc = 0;
  for (std::size_t i = begin; i < end; ++i) acc += record.samples[i];
  return acc * record.dt;
}

namespace {
int sign_of(double v) { return v < 0 ? -1 : 1; }
}  // namespace

int integrate_s_beta(const HomodyneRecord& record) {
  record.validate();
  if (record.phase_boundaries.empty()) {
    throw std::invalid_argument("integrate_s_beta: record has no phase boundaries");
  }
  return sign_of(integrated_signal(record, 0, record.phase_end(0)));
}

int integrate_s_a(const HomodyneRecord& record, double t_wait) {
  record.validate();
  if (record.phase_boundaries.size() < 2) {
    throw std::invalid_argument("integrate_s_a: record lacks a qubit readout phase");
  }
  if (!(t_wait >= 0)) throw std::invalid_argument("integrate_s_a: waiting time must be nonnegative");
  const std::size_t begin = record.phase_end(0) + step_count(t_wait, record.dt);
  const std::size_t end = record.phase_end(1);
  if (begin >= end) {
    throw std::invalid_argument("integrate_s_a: integration window is empty (T_w >= T_m)");
  }
  return sign_of(integrated_signal(record, begin, end));
}

}  // namespace qtele
