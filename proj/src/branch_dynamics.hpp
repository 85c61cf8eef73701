#pragma once

// Step kernels shared by the forward filter and the backward effect-matrix
// propagation.
//
// States live on (qubit register) x (cavity). The measurement and damping
// operators act on the cavity only, and every Hamiltonian in this model is
// diagonal on the register, so a density matrix is handled as a grid of
// n_fock x n_fock blocks, one per pair of register basis states.
//
// One forward step is the Kraus map
//
//   rho -> U [ M rho M^dag + (1 - eta) kappa dt a rho a^dag ] U^dag,
//   M = 1 - x / 2 - x^2 / 8 + sqrt(kappa eta) e^{-i phi} a dY,
//   x = kappa dt a^dag a,  dY = J dt,  U = exp(-i H dt),
//
// followed by trace renormalization. To first order in dt it is the Euler
// step of the homodyne SME, and it keeps rho positive. The x^2 term is the
// next order of sqrt(1 - x), so without the record the map preserves the
// trace up to x^3 / 8. The backward step is the exact adjoint of the same
// map driven by the recorded J.
//
// Block k may be stored in a frame displaced by alpha_k, i.e. the block (k, l)
// holds D(alpha_k)^dag rho_kl D(alpha_l). The map above is conjugated exactly:
// a becomes a + alpha_k on the left and a^dag + alpha_l^* on the right, so M
// turns pentadiagonal and H picks up linear and constant terms. Placing alpha_k
// at the driven steady state of block k keeps the stored field small while the
// lab-frame field is large.

#include "qtele/hilbert.hpp"
#include "qtele/sme.hpp"

#include <Eigen/SparseCore>

#include <vector>

namespace qtele::detail {

/// H_k = chi_k a^dag a + drive a^dag + drive^* a on register block k.
struct DispersiveModel {
  Index n_fock = 0;
  std::vector<double> chi;
  Complex drive{0, 0};
  std::vector<Complex> frame;
};

/// chi_k for every register basis state of `layout` (qubit A most significant).
DispersiveModel dispersive_model(const PhaseSpec& phase, const HilbertLayout& layout, double kappa);

class BranchDynamics {
 public:
  /// Lab frame, arbitrary Hamiltonian on the layout.
  BranchDynamics(const Operator& hamiltonian, const SmeParams& params, double lo_phase);
  BranchDynamics(const DispersiveModel& model, const SmeParams& params, double lo_phase);

  /// Advances the normalized state in place; returns the current recorded at
  /// the pre-step state.
  double forward(CMatrix& rho, double dW) const;

  /// Pulls a unit-trace effect matrix back across one step.
  void backward(CMatrix& effect, double current) const;

  /// Tr(X_phi rho) with X_phi = e^{-i phi} a + e^{i phi} a^dag.
  double quadrature(const CMatrix& rho) const;

  /// Population of the top two stored Fock levels.
  double top_population(const CMatrix& rho) const;

  /// Lab frame to displaced frame and back; both apply to states and effects.
  void to_frame(CMatrix& m) const;
  void from_frame(CMatrix& m) const;

  Index register_dim() const { return q_; }
  Index n_fock() const { return n_; }

 private:
  using Sparse = Eigen::SparseMatrix<Complex>;
  struct Block {
    Complex alpha{0, 0};
    Sparse jump, jump_adj;  // a + alpha
    Sparse no_jump, no_jump_adj;  // 1 - x / 2 - x^2 / 8
    CMatrix unitary;
    bool has_unitary = false;
  };

  void init_blocks(const SmeParams& params);
  Complex record_weight(double current) const;
  void apply_measurement(const CMatrix& in, CMatrix& out, Complex c, Index k, Index l) const;
  void apply_measurement_adjoint(const CMatrix& in, CMatrix& out, Complex c, Index k, Index l) const;
  double trace_drift(const CMatrix& rho) const;
  void conjugate_frames(CMatrix& m, bool inverse) const;

  Index n_ = 0;
  Index q_ = 0;
  SmeParams params_;
  Complex lo_;
  double unmonitored_weight_ = 0;
  bool displaced_ = false;

  std::vector<Block> blocks_;
  bool full_ = false;  // Hamiltonian couples register blocks
  CMatrix full_unitary_;

  CVector sqrt_n_;  // sqrt(1), ..., sqrt(N - 1)
  std::vector<Sparse> defect_;  // M0^dag M0 + kappa dt N - 1 per block
};

}  // namespace qtele::detail
