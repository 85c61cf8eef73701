#pragma once

// Conditional dynamics of a dispersively coupled qubit register and cavity
// under continuous homodyne detection of the cavity output.

#include "qtele/hilbert.hpp"
#include "qtele/random.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qtele {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One constant-Hamiltonian probing interval. Rates are angular frequencies in
/// units of the cavity linewidth's time unit.
struct PhaseSpec {
  double duration = 0;
  double chi_a = 0;
  double chi_b = 0;
  Complex drive{0, 0};
  /// Local-oscillator phase; 0 measures X = a + a^dag.
  double lo_phase = 0;

  void validate() const;
};

struct SmeParams {
  double kappa = 1;
  double eta = 1;
  double dt = 1e-3;

  void validate() const;
};

/// Uniformly sampled homodyne current. phase_boundaries[i] is the sample index
/// one past the end of phase i, so the last boundary equals samples.size().
struct HomodyneRecord {
  double dt = 0;
  double eta = 0;
  double kappa = 0;
  std::vector<double> samples;
  std::vector<std::size_t> phase_boundaries;

  double duration() const { return dt * static_cast<double>(samples.size()); }
  std::size_t phase_begin(std::size_t phase) const { return phase == 0 ? 0 : phase_boundaries.at(phase - 1); }
  std::size_t phase_end(std::size_t phase) const { return phase_boundaries.at(phase); }
  void validate() const;

  bool operator==(const HomodyneRecord&) const = default;
};

/// Number of integrator steps covering `duration`.
std::size_t step_count(double duration, double dt);

/// H = sum_q chi_q sigma_z^(q) a^dag a + eps a^dag + eps^* a in the frame rotating at
/// the cavity frequency. Qubit q is the q-th factor in front of the cavity; chi_a
/// couples factor 0 and chi_b factor 1.
Operator build_hamiltonian(const PhaseSpec& phase, const HilbertLayout& layout);

struct StepResult {
  DensityOperator rho;
  /// Current J recorded at the pre-step state.
  double current;
};

/// One step of the homodyne stochastic master equation driven by the Wiener
/// increment dW (variance dt).
StepResult sme_step(const DensityOperator& rho, const Operator& hamiltonian, const SmeParams& params, double dW,
                    double lo_phase = 0.0);

struct PhaseResult {
  DensityOperator rho;
  std::vector<double> samples;
  /// Largest population seen in the top two stored Fock levels during the
  /// phase. A driven phase stores each register block displaced by its
  /// steady-state field, so this measures the field relative to that point.
  double max_truncation_population = 0;
};

PhaseResult simulate_phase(const DensityOperator& rho0, const PhaseSpec& phase, const SmeParams& params, Rng& rng);

/// Sign of the integrated current over the first phase; +1 favours |+beta>.
int integrate_s_beta(const HomodyneRecord& record);

/// Sign of the integrated current over [T_beta + t_wait, T_beta + T_m]; -1 means
/// qubit A in |1>, +1 means |0>.
int integrate_s_a(const HomodyneRecord& record, double t_wait);

/// Sum of J * dt over samples [begin, end); exposed for diagnostics.
double integrated_signal(const HomodyneRecord& record, std::size_t begin, std::size_t end);

}  // namespace qtele
