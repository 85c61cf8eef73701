#include "branch_dynamics.hpp"

#include <cmath>
#include <string>

namespace qtele::detail {

namespace {

constexpr double kMaxTraceDrift = 1e-2;
constexpr double kMaxEffectGrowth = 10.0;

void symmetrize_and_normalize(CMatrix& m, const char* who) {
  m = (m + m.adjoint()).eval() / 2.0;
  const double tr = m.trace().real();
  if (!std::isfinite(tr) || tr <= 0) {
    throw NumericalError(std::string(who) + ": trace became non-positive or non-finite");
  }
  m /= tr;
}

double pauli_z_sign(Index bit) { return bit ? 1.0 : -1.0; }

}  // namespace

DispersiveModel dispersive_model(const PhaseSpec& phase, const HilbertLayout& layout, double kappa) {
  phase.validate();
  const std::size_t qubits = layout.cavity_index();
  for (std::size_t q = 0; q < qubits; ++q) {
    if (layout.factor(q) != 2) throw std::invalid_argument("dispersive_model: register factors must be qubits");
  }
  if (qubits > 2) throw std::invalid_argument("dispersive_model: at most two register qubits");
  if (qubits < 2 && phase.chi_b != 0) {
    throw std::invalid_argument("dispersive_model: chi_b set but the layout has no qubit B");
  }

  DispersiveModel m;
  m.n_fock = layout.cavity_dim();
  m.drive = phase.drive;
  const Index q = layout.register_dim();
  for (Index k = 0; k < q; ++k) {
    double chi = 0;
    if (qubits == 1) chi = phase.chi_a * pauli_z_sign(k);
    if (qubits == 2) chi = phase.chi_a * pauli_z_sign(k / 2) + phase.chi_b * pauli_z_sign(k % 2);
    m.chi.push_back(chi);
    m.frame.push_back(phase.drive == Complex(0, 0) ? Complex(0, 0)
                                                   : Complex(0, -1) * phase.drive / Complex(0.5 * kappa, chi));
  }
  return m;
}

BranchDynamics::BranchDynamics(const Operator& hamiltonian, const SmeParams& params, double lo_phase)
    : n_(hamiltonian.layout().cavity_dim()),
      q_(hamiltonian.layout().register_dim()),
      params_(params),
      lo_(std::polar(1.0, -lo_phase)),
      unmonitored_weight_((1.0 - params.eta) * params.kappa * params.dt) {
  params_.validate();
  if (n_ < 2) throw std::invalid_argument("BranchDynamics: cavity factor must have at least two levels");
  blocks_.resize(static_cast<std::size_t>(q_));
  init_blocks(params);

  const CMatrix& h = hamiltonian.matrix();
  if (h.cwiseAbs().maxCoeff() == 0.0) return;
  for (Index k = 0; k < q_ && !full_; ++k) {
    for (Index l = 0; l < q_; ++l) {
      if (k != l && h.block(k * n_, l * n_, n_, n_).cwiseAbs().maxCoeff() != 0.0) {
        full_ = true;
        break;
      }
    }
  }
  const Complex step(0.0, -params.dt);
  if (full_) {
    full_unitary_ = (step * h).exp();
    return;
  }
  for (Index k = 0; k < q_; ++k) {
    const auto hk = h.block(k * n_, k * n_, n_, n_);
    if (hk.cwiseAbs().maxCoeff() == 0.0) continue;
    Block& b = blocks_[static_cast<std::size_t>(k)];
    b.unitary = (step * CMatrix(hk)).exp();
    b.has_unitary = true;
  }
}

BranchDynamics::BranchDynamics(const DispersiveModel& model, const SmeParams& params, double lo_phase)
    : n_(model.n_fock),
      q_(static_cast<Index>(model.chi.size())),
      params_(params),
      lo_(std::polar(1.0, -lo_phase)),
      unmonitored_weight_((1.0 - params.eta) * params.kappa * params.dt) {
  params_.validate();
  if (n_ < 2) throw std::invalid_argument("BranchDynamics: cavity factor must have at least two levels");
  if (q_ < 1 || model.frame.size() != model.chi.size()) {
    throw std::invalid_argument("BranchDynamics: one chi and one frame displacement per register block");
  }
  blocks_.resize(static_cast<std::size_t>(q_));
  for (Index k = 0; k < q_; ++k) {
    blocks_[static_cast<std::size_t>(k)].alpha = model.frame[static_cast<std::size_t>(k)];
    displaced_ = displaced_ || model.frame[static_cast<std::size_t>(k)] != Complex(0, 0);
  }
  init_blocks(params);

  const CMatrix a = fock_annihilation(n_).matrix();
  const CMatrix ad = a.adjoint();
  const CMatrix number = number_operator(n_).matrix();
  const Complex step(0.0, -params.dt);
  for (Index k = 0; k < q_; ++k) {
    Block& b = blocks_[static_cast<std::size_t>(k)];
    const double chi = model.chi[static_cast<std::size_t>(k)];
    const Complex al = b.alpha;
    // D(alpha)^dag H D(alpha) with a -> a + alpha.
    CMatrix h = chi * (number + std::conj(al) * a + al * ad) + model.drive * ad + std::conj(model.drive) * a;
    h.diagonal().array() += chi * std::norm(al) + 2.0 * std::real(std::conj(model.drive) * al);
    if (h.cwiseAbs().maxCoeff() == 0.0) continue;
    b.unitary = (step * h).exp();
    b.has_unitary = true;
  }
}

void BranchDynamics::init_blocks(const SmeParams& params) {
  const double x = params.kappa * params.dt;
  sqrt_n_.resize(n_ - 1);
  for (Index k = 0; k + 1 < n_; ++k) sqrt_n_(k) = std::sqrt(static_cast<double>(k + 1));
  Sparse id(n_, n_);
  id.setIdentity();
  for (Block& b : blocks_) {
    std::vector<Eigen::Triplet<Complex>> t;
    for (Index m = 0; m < n_; ++m) {
      if (b.alpha != Complex(0, 0)) t.emplace_back(m, m, b.alpha);
      if (m + 1 < n_) t.emplace_back(m, m + 1, sqrt_n_(m));
    }
    b.jump.resize(n_, n_);
    b.jump.setFromTriplets(t.begin(), t.end());
    b.jump_adj = b.jump.adjoint();
    Sparse number = b.jump_adj * b.jump;
    b.no_jump = id - (0.5 * x) * number - (0.125 * x * x) * Sparse(number * number);
    b.no_jump.prune(Complex(0, 0));
    b.no_jump_adj = b.no_jump.adjoint();
    // M0^dag M0 + x N - 1 = x^3 N^3 / 8 + x^4 N^4 / 64
    const Sparse n2 = number * number;
    Sparse defect = (x * x * x / 8) * Sparse(n2 * number) + (x * x * x * x / 64) * Sparse(n2 * n2);
    defect_.push_back(std::move(defect));
  }
}

Complex BranchDynamics::record_weight(double current) const {
  return std::sqrt(params_.kappa * params_.eta) * current * params_.dt * lo_;
}

double BranchDynamics::quadrature(const CMatrix& rho) const {
  Complex tr_a(0, 0);
  for (Index k = 0; k < q_; ++k) {
    const Index o = k * n_;
    for (Index m = 0; m + 1 < n_; ++m) tr_a += sqrt_n_(m) * rho(o + m + 1, o + m);
    const Complex al = blocks_[static_cast<std::size_t>(k)].alpha;
    if (al != Complex(0, 0)) tr_a += al * rho.block(o, o, n_, n_).trace();
  }
  return 2.0 * std::real(lo_ * tr_a);
}

double BranchDynamics::top_population(const CMatrix& rho) const {
  double p = 0;
  for (Index k = 0; k < q_; ++k) {
    for (Index m = std::max<Index>(0, n_ - 2); m < n_; ++m) p += rho(k * n_ + m, k * n_ + m).real();
  }
  return p;
}

// Trace defect of the unmonitored Kraus pair relative to the trace-preserving
// Lindblad generator.
double BranchDynamics::trace_drift(const CMatrix& rho) const {
  double acc = 0;
  for (Index k = 0; k < q_; ++k) {
    const Sparse& d = defect_[static_cast<std::size_t>(k)];
    const Index o = k * n_;
    for (Index j = 0; j < d.outerSize(); ++j) {
      for (Sparse::InnerIterator it(d, j); it; ++it) acc += std::real(it.value() * rho(o + it.col(), o + it.row()));
    }
  }
  return acc;
}

// out = M_k in M_l^dag + w (a + alpha_k) in (a + alpha_l)^dag
void BranchDynamics::apply_measurement(const CMatrix& in, CMatrix& out, Complex c, Index k, Index l) const {
  const Block& bk = blocks_[static_cast<std::size_t>(k)];
  const Block& bl = blocks_[static_cast<std::size_t>(l)];
  const CMatrix jumped = bk.jump * in;
  CMatrix left = bk.no_jump * in;
  left += c * jumped;
  out.noalias() = left * bl.no_jump_adj;
  out.noalias() += std::conj(c) * (left * bl.jump_adj);
  if (unmonitored_weight_ > 0) out.noalias() += unmonitored_weight_ * (jumped * bl.jump_adj);
}

// out = M_k^dag in M_l + w (a + alpha_k)^dag in (a + alpha_l)
void BranchDynamics::apply_measurement_adjoint(const CMatrix& in, CMatrix& out, Complex c, Index k,
                                               Index l) const {
  const Block& bk = blocks_[static_cast<std::size_t>(k)];
  const Block& bl = blocks_[static_cast<std::size_t>(l)];
  const CMatrix jumped = bk.jump_adj * in;
  CMatrix left = bk.no_jump_adj * in;
  left += std::conj(c) * jumped;
  out.noalias() = left * bl.no_jump;
  out.noalias() += c * (left * bl.jump);
  if (unmonitored_weight_ > 0) out.noalias() += unmonitored_weight_ * (jumped * bl.jump);
}

double BranchDynamics::forward(CMatrix& rho, double dW) const {
  const double dt = params_.dt;
  const double current = std::sqrt(params_.kappa * params_.eta) * quadrature(rho) + dW / dt;

  const double drift = trace_drift(rho);
  if (drift > kMaxTraceDrift) {
    throw NumericalError("sme_step: trace drift " + std::to_string(drift) + " exceeds 1e-2; step too coarse");
  }

  const Complex c = record_weight(current);
  CMatrix out(rho.rows(), rho.cols());
  CMatrix block(n_, n_);
  CMatrix tmp(n_, n_);
  for (Index k = 0; k < q_; ++k) {
    for (Index l = k; l < q_; ++l) {
      const auto in = rho.block(k * n_, l * n_, n_, n_);
      // Every map here is block-local, so an empty coherence block stays empty.
      if (in.isZero(0.0)) {
        out.block(k * n_, l * n_, n_, n_).setZero();
        if (l != k) out.block(l * n_, k * n_, n_, n_).setZero();
        continue;
      }
      apply_measurement(in, block, c, k, l);
      if (!full_) {
        const Block& bk = blocks_[static_cast<std::size_t>(k)];
        const Block& bl = blocks_[static_cast<std::size_t>(l)];
        if (bk.has_unitary) {
          tmp.noalias() = bk.unitary * block;
          block.swap(tmp);
        }
        if (bl.has_unitary) {
          tmp.noalias() = block * bl.unitary.adjoint();
          block.swap(tmp);
        }
      }
      out.block(k * n_, l * n_, n_, n_) = block;
      if (l != k) out.block(l * n_, k * n_, n_, n_) = block.adjoint();
    }
  }
  if (full_) out = (full_unitary_ * out * full_unitary_.adjoint()).eval();
  symmetrize_and_normalize(out, "sme_step");
  rho.swap(out);
  return current;
}

void BranchDynamics::backward(CMatrix& effect, double current) const {
  const Complex c = record_weight(current);

  CMatrix pulled;
  const CMatrix* src = &effect;
  if (full_) {
    pulled = full_unitary_.adjoint() * effect * full_unitary_;
    src = &pulled;
  }

  CMatrix out(effect.rows(), effect.cols());
  CMatrix block(n_, n_);
  CMatrix tmp(n_, n_);
  for (Index k = 0; k < q_; ++k) {
    for (Index l = k; l < q_; ++l) {
      block = src->block(k * n_, l * n_, n_, n_);
      if (block.isZero(0.0)) {
        out.block(k * n_, l * n_, n_, n_).setZero();
        if (l != k) out.block(l * n_, k * n_, n_, n_).setZero();
        continue;
      }
      if (!full_) {
        const Block& bk = blocks_[static_cast<std::size_t>(k)];
        const Block& bl = blocks_[static_cast<std::size_t>(l)];
        if (bk.has_unitary) {
          tmp.noalias() = bk.unitary.adjoint() * block;
          block.swap(tmp);
        }
        if (bl.has_unitary) {
          tmp.noalias() = block * bl.unitary;
          block.swap(tmp);
        }
      }
      apply_measurement_adjoint(block, tmp, c, k, l);
      out.block(k * n_, l * n_, n_, n_) = tmp;
      if (l != k) out.block(l * n_, k * n_, n_, n_) = tmp.adjoint();
    }
  }
  const double before = effect.trace().real();
  const double after = out.trace().real();
  if (!(after <= kMaxEffectGrowth * before)) {
    throw NumericalError("backward_step: effect matrix norm grew more than 10x in one step");
  }
  symmetrize_and_normalize(out, "backward_step");
  effect.swap(out);
}

void BranchDynamics::conjugate_frames(CMatrix& m, bool inverse) const {
  if (!displaced_) return;
  std::vector<CMatrix> d;
  for (const Block& b : blocks_) {
    CMatrix u = displacement_operator(b.alpha, n_).matrix();
    d.push_back(inverse ? CMatrix(u) : CMatrix(u.adjoint()));
  }
  for (Index k = 0; k < q_; ++k) {
    for (Index l = 0; l < q_; ++l) {
      const CMatrix blk = m.block(k * n_, l * n_, n_, n_);
      m.block(k * n_, l * n_, n_, n_).noalias() =
          d[static_cast<std::size_t>(k)] * blk * d[static_cast<std::size_t>(l)].adjoint();
    }
  }
}

void BranchDynamics::to_frame(CMatrix& m) const { conjugate_frames(m, false); }
void BranchDynamics::from_frame(CMatrix& m) const { conjugate_frames(m, true); }

}  // namespace qtele::detail
