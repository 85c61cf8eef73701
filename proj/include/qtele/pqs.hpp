#pragma once

// Retrodiction of the t = 0 Bell measurement from a full homodyne record: the
// effect matrix E(t) is propagated backward from E(T) = 1 over the record and
// combined with a prior state through the generalized Born rule
//
//   p(i) = Tr(M_i rho M_i^dag E) / sum_j Tr(M_j rho M_j^dag E).

#include "qtele/bell.hpp"
#include "qtele/hilbert.hpp"
#include "qtele/sme.hpp"

#include <array>
#include <optional>
#include <span>

namespace qtele {

/// Positive operator on the (qubit A, cavity) space, kept at unit trace.
class EffectMatrix {
 public:
  EffectMatrix(CMatrix matrix, HilbertLayout layout);

  static EffectMatrix identity(const HilbertLayout& layout);

  const CMatrix& matrix() const { return matrix_; }
  const HilbertLayout& layout() const { return layout_; }

 private:
  CMatrix matrix_;
  HilbertLayout layout_;
};

struct BellPovm {
  /// Indexed by BellOutcome::index().
  std::array<Operator, 4> elements;
  /// Largest deviation of sum_i M_i from the identity on span{|i>|+-beta>}.
  double completeness_deficit = 0;

  const Operator& operator[](BellOutcome o) const { return elements[o.index()]; }
};

struct RetrodictionResult {
  std::array<double, 4> probabilities{};
  BellOutcome argmax;
  double margin = 0;
};

EffectMatrix backward_step(const EffectMatrix& effect, const Operator& hamiltonian, const SmeParams& params,
                           double current, double lo_phase = 0.0);

/// E(0) from E(T) = 1. phases[i] covers samples [phase_begin(i), phase_end(i)).
EffectMatrix propagate_backward(const HomodyneRecord& record, std::span<const PhaseSpec> phases, Index n_fock);

BellPovm build_bell_povm(double beta, Index n_fock);

/// Uniform mixture of the four product states |i>|+-beta>.
DensityOperator uniform_bell_prior(double beta, Index n_fock);

/// Generalized Born rule. Returns nullopt when every weight vanishes.
std::optional<RetrodictionResult> retrodict(const DensityOperator& prior, const EffectMatrix& effect,
                                            const BellPovm& povm);

}  // namespace qtele
