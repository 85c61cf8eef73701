#pragma once

// Teleportation of qubit A onto qubit B through a cavity, with the Bell
// measurement of (A, cavity) replaced by two sequential homodyne probes:
//
//   1. prepare (|0>_B|beta> + |1>_B|-beta>)/sqrt(2),
//   2. apply the controlled parity A->C and a Hadamard on A (ideal gates),
//   3. probe the decaying field for T_beta (no drive, no dispersive shift),
//   4. drive the cavity for T_m with qubit A dispersively coupled,
//   5. pick the Bell outcome from the record, either by thresholding the
//      integrated signals (Direct) or by retrodiction (Pqs),
//   6. apply the Pauli correction on B and score <psi|rho_B|psi>.

#include "qtele/bell.hpp"
#include "qtele/hilbert.hpp"
#include "qtele/pqs.hpp"
#include "qtele/random.hpp"
#include "qtele/sme.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace qtele {

enum class Strategy { Direct, Pqs };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

struct ProtocolConfig {
  double beta = 2.0;
  double kappa = 1.0;
  double chi_over_kappa = 13.5;
  double drive_over_chi = 2.0;
  /// T = T_beta + T_m, in units of 1/kappa.
  double total_time = 2.0;
  double t_beta_fraction = 0.4;
  double t_wait = 0.3;
  double eta = 1.0;
  Index n_fock = 40;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  std::size_t n_states = 500;
  std::size_t n_trajectories_per_state = 1;

  double t_beta() const { return t_beta_fraction * total_time; }
  double t_m() const { return total_time - t_beta(); }
  double chi_a() const { return chi_over_kappa * kappa; }
  Complex drive() const { return {drive_over_chi * chi_a(), 0.0}; }

  SmeParams sme_params() const { return {kappa, eta, dt}; }
  /// Field probe, then qubit-A readout.
  std::array<PhaseSpec, 2> phases() const;

  void validate() const;
};

/// (|0>_B|beta> + |1>_B|-beta>)/sqrt(2) on (qubit B, cavity).
Ket prepare_entangled_state(double beta, Index n_fock);

/// |0><0| (x) 1 + |1><1| (x) exp(i pi a^dag a) on (qubit, cavity).
Operator controlled_phase_unitary(Index n_fock);

/// H_A U_AC (psi_A (x) phi_BC) on (qubit A, qubit B, cavity).
Ket apply_bell_gates(const Ket& psi_a, const Ket& phi_bc);

/// Pauli correction on B for a Bell outcome: 1, sigma_x, sigma_z, sigma_z sigma_x.
Operator choose_correction(BellOutcome outcome);

/// <psi| C rho_B C^dag |psi> with C the correction for `outcome`.
double corrected_fidelity(const Ket& psi, const DensityOperator& rho_b, BellOutcome outcome);

struct Decisions {
  BellOutcome direct;
  BellOutcome pqs;
  /// Retrodiction was degenerate and Pqs fell back to the Direct choice.
  bool pqs_fallback = false;
  std::optional<RetrodictionResult> retrodiction;

  BellOutcome chosen(Strategy s) const { return s == Strategy::Direct ? direct : pqs; }
};

/// Both strategies' choices; a pure function of the record and configuration.
Decisions decide(const HomodyneRecord& record, const ProtocolConfig& config);

struct ForwardRun {
  HomodyneRecord record;
  DensityOperator rho;
  double max_truncation_population = 0;
};

/// Forward filter from `initial` through both probing phases. The initial
/// state may live on (A, B, C) or (A, C). Coherences between the two qubit-A
/// basis states are dropped at t = 0; the returned rho is exact on every other
/// block.
ForwardRun simulate_record(const ProtocolConfig& config, const Ket& initial, Rng& rng);

struct RunResult {
  Ket input;
  Decisions decisions;
  std::array<double, 2> fidelities{};  // indexed by Strategy
  HomodyneRecord record;
  double max_truncation_population = 0;

  double fidelity(Strategy s) const { return fidelities[static_cast<std::size_t>(s)]; }
};

RunResult run_trajectory(const ProtocolConfig& config, const Ket& psi_a, Rng& rng);

struct OracleResult {
  BellOutcome outcome;
  double fidelity = 0;
};

/// Ideal projective Bell measurement at t = 0 (no probing dynamics): samples an
/// outcome with the Born weights of the non-orthogonal projectors and applies
/// the matching correction.
OracleResult run_projective_oracle(double beta, Index n_fock, const Ket& psi_a, Rng& rng);

struct FidelityEstimate {
  double mean = 0;
  double std_error = 0;
  std::size_t n = 0;
  std::size_t fallbacks = 0;
};

FidelityEstimate summarize(std::span<const double> fidelities, std::size_t fallbacks = 0);

struct TrajectorySummary {
  std::size_t state_index = 0;
  std::size_t trajectory_index = 0;
  BellOutcome direct;
  BellOutcome pqs;
  bool fallback = false;
  std::array<double, 2> fidelities{};
  std::optional<RetrodictionResult> retrodiction;
  double max_truncation_population = 0;
  std::optional<HomodyneRecord> record;

  double fidelity(Strategy s) const { return fidelities[static_cast<std::size_t>(s)]; }
  BellOutcome outcome(Strategy s) const { return s == Strategy::Direct ? direct : pqs; }
};

struct EnsembleResult {
  std::vector<TrajectorySummary> runs;
  std::array<FidelityEstimate, 2> estimates;
  double max_truncation_population = 0;

  const FidelityEstimate& estimate(Strategy s) const { return estimates[static_cast<std::size_t>(s)]; }
};

/// Input state for state index s; identical across sweeps with the same seed.
Ket input_state(std::uint64_t seed, std::size_t state_index);

/// n_states Haar inputs x n_trajectories_per_state records, both strategies
/// scored on every record. Results do not depend on `workers`.
EnsembleResult run_ensemble(const ProtocolConfig& config, std::size_t workers = 1, bool keep_records = false);

FidelityEstimate estimate_protocol_fidelity(const ProtocolConfig& config, Strategy strategy, std::size_t workers = 1);

struct SweepPoint {
  double value = 0;
  std::array<FidelityEstimate, 2> estimates;
  double max_truncation_population = 0;

  const FidelityEstimate& estimate(Strategy s) const { return estimates[static_cast<std::size_t>(s)]; }
};

std::vector<SweepPoint> sweep_efficiency(const ProtocolConfig& config, std::span<const double> etas,
                                         std::size_t workers = 1);
std::vector<SweepPoint> sweep_time(const ProtocolConfig& config, std::span<const double> total_times,
                                   std::size_t workers = 1);

}  // namespace qtele
