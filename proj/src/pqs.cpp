#include "qtele/pqs.hpp"

#include "branch_dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace qtele {

EffectMatrix::EffectMatrix(CMatrix matrix, HilbertLayout layout) : matrix_(std::move(matrix)), layout_(std::move(layout)) {
  if (matrix_.rows() != layout_.dim() || matrix_.cols() != layout_.dim()) {
    throw std::invalid_argument("EffectMatrix: matrix dimension does not match layout");
  }
}

EffectMatrix EffectMatrix::identity(const HilbertLayout& layout) {
  const Index d = layout.dim();
  return {CMatrix::Identity(d, d) / static_cast<double>(d), layout};
}

EffectMatrix backward_step(const EffectMatrix& effect, const Operator& hamiltonian, const SmeParams& params,
                           double current, double lo_phase) {
  if (!(effect.layout() == hamiltonian.layout())) {
    throw std::invalid_argument("backward_step: effect and Hamiltonian layouts differ");
  }
  const detail::BranchDynamics dynamics(hamiltonian, params, lo_phase);
  CMatrix m = effect.matrix();
  const double tr = m.trace().real();
  if (!(tr > 0)) throw std::invalid_argument("backward_step: effect matrix must have positive trace");
  m /= tr;
  dynamics.backward(m, current);
  return {std::move(m), effect.layout()};
}

EffectMatrix propagate_backward(const HomodyneRecord& record, std::span<const PhaseSpec> phases, Index n_fock) {
  record.validate();
  if (record.phase_boundaries.size() != phases.size()) {
    throw std::invalid_argument("propagate_backward: record has " + std::to_string(record.phase_boundaries.size()) +
                                " phases, expected " + std::to_string(phases.size()));
  }
  if (!phases.empty() && record.phase_boundaries.back() != record.samples.size()) {
    throw std::invalid_argument("propagate_backward: record does not end at the last phase boundary");
  }
  for (std::size_t p = 0; p < phases.size(); ++p) {
    const std::size_t len = record.phase_end(p) - record.phase_begin(p);
    if (len != step_count(phases[p].duration, record.dt)) {
      throw std::invalid_argument("propagate_backward: phase " + std::to_string(p) + " length does not match record");
    }
  }

  const HilbertLayout layout = HilbertLayout::qubit_cavity(n_fock);
  const SmeParams params{record.kappa, record.eta, record.dt};
  CMatrix e = EffectMatrix::identity(layout).matrix();
  for (std::size_t p = phases.size(); p-- > 0;) {
    const std::size_t begin = record.phase_begin(p);
    const std::size_t end = record.phase_end(p);
    if (begin == end) continue;
    const detail::BranchDynamics dynamics(detail::dispersive_model(phases[p], layout, params.kappa), params,
                                          phases[p].lo_phase);
    dynamics.to_frame(e);
    for (std::size_t s = end; s-- > begin;) {
      dynamics.backward(e, record.samples[s]);
    }
    dynamics.from_frame(e);
  }
  return {std::move(e), layout};
}

BellPovm build_bell_povm(double beta, Index n_fock) {
  const HilbertLayout layout = HilbertLayout::qubit_cavity(n_fock);
  const Ket plus = coherent_state(Complex(beta), n_fock);
  const Ket minus = coherent_state(Complex(-beta), n_fock);

  BellPovm povm{{Operator(CMatrix::Zero(layout.dim(), layout.dim()), layout),
                 Operator(CMatrix::Zero(layout.dim(), layout.dim()), layout),
                 Operator(CMatrix::Zero(layout.dim(), layout.dim()), layout),
                 Operator(CMatrix::Zero(layout.dim(), layout.dim()), layout)},
                0.0};
  for (BellOutcome o : BellOutcome::all()) {
    const Ket& field = o.field_sign > 0 ? plus : minus;
    const Ket v = tensor(basis_ket(HilbertLayout::qubit(), o.qubit), field);
    povm.elements[o.index()] = Operator(v.amplitudes() * v.amplitudes().adjoint(), layout, "M_" + o.label());
  }

  // Completeness on the coherent-state span: sum over field labels restricted to
  // span{|beta>, |-beta>} has eigenvalues 1 +- <beta|-beta>.
  CMatrix basis(n_fock, 2);
  basis << plus.amplitudes(), minus.amplitudes();
  const Eigen::HouseholderQR<CMatrix> qr(basis);
  const CMatrix q = qr.householderQ() * CMatrix::Identity(n_fock, 2);
  const CMatrix s = plus.amplitudes() * plus.amplitudes().adjoint() + minus.amplitudes() * minus.amplitudes().adjoint();
  const Eigen::SelfAdjointEigenSolver<CMatrix> eig(q.adjoint() * s * q, Eigen::EigenvaluesOnly);
  povm.completeness_deficit = (eig.eigenvalues().array() - 1.0).abs().maxCoeff();
  return povm;
}

DensityOperator uniform_bell_prior(double beta, Index n_fock) {
  const HilbertLayout layout = HilbertLayout::qubit_cavity(n_fock);
  CMatrix rho = CMatrix::Zero(layout.dim(), layout.dim());
  for (BellOutcome o : BellOutcome::all()) {
    const Ket v = tensor(basis_ket(HilbertLayout::qubit(), o.qubit), coherent_state(Complex(o.field_sign * beta), n_fock));
    rho += 0.25 * v.amplitudes() * v.amplitudes().adjoint();
  }
  return {rho / rho.trace().real(), layout};
}

std::optional<RetrodictionResult> retrodict(const DensityOperator& prior, const EffectMatrix& effect,
                                            const BellPovm& povm) {
  if (!(prior.layout() == effect.layout()) || !(prior.layout() == povm.elements[0].layout())) {
    throw std::invalid_argument("retrodict: prior, effect and POVM must share the (qubit A, cavity) layout");
  }
  std::array<double, 4> weight{};
  double total = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const CMatrix& m = povm.elements[i].matrix();
    weight[i] = std::max(0.0, (m * prior.matrix() * m.adjoint() * effect.matrix()).trace().real());
    total += weight[i];
  }
  if (!(total > 0) || !std::isfinite(total)) return std::nullopt;

  RetrodictionResult r;
  std::size_t best = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    r.probabilities[i] = weight[i] / total;
    if (r.probabilities[i] > r.probabilities[best]) best = i;
  }
  double second = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i != best) second = std::max(second, r.probabilities[i]);
  }
  r.argmax = BellOutcome::from_index(best);
  r.margin = r.probabilities[best] - second;
  return r;
}

}  // namespace qtele
