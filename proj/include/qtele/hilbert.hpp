#pragma once

// Finite-dimensional operator algebra for a qubit register coupled to one
// Fock-truncated oscillator. Everything here is header-only and templated on
// the complex scalar type; the aliases at the bottom fix it to double.
//
// Tensor ordering follows the layout's factor list left to right, so for the
// full teleportation space (qubit A, qubit B, cavity) the basis index is
// (a * 2 + b) * n_fock + n. The cavity is always the last factor.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qtele {

using Index = Eigen::Index;

class HilbertLayout {
 public:
  HilbertLayout() = default;

  explicit HilbertLayout(std::vector<Index> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) {
      throw std::invalid_argument("HilbertLayout: at least one factor required");
    }
    dim_ = 1;
    for (Index d : factors_) {
      if (d < 1) {
        throw std::invalid_argument("HilbertLayout: factor dimensions must be positive");
      }
      dim_ *= d;
    }
  }

  /// (qubit A, qubit B, cavity)
  static HilbertLayout full(Index n_fock) { return HilbertLayout({2, 2, n_fock}); }
  /// (qubit A, cavity); the space the backward pass lives on.
  static HilbertLayout qubit_cavity(Index n_fock) { return HilbertLayout({2, n_fock}); }
  static HilbertLayout cavity(Index n_fock) { return HilbertLayout({n_fock}); }
  static HilbertLayout qubit() { return HilbertLayout({2}); }

  const std::vector<Index>& factors() const { return factors_; }
  Index factor(std::size_t i) const { return factors_.at(i); }
  std::size_t size() const { return factors_.size(); }
  Index dim() const { return dim_; }

  std::size_t cavity_index() const { return factors_.size() - 1; }
  Index cavity_dim() const { return factors_.back(); }
  /// Dimension of everything in front of the cavity.
  Index register_dim() const { return dim_ / factors_.back(); }

  bool operator==(const HilbertLayout&) const = default;

 private:
  std::vector<Index> factors_;
  Index dim_ = 0;
};

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
class BasicKet {
 public:
  using Vector = DenseVector<Scalar>;
  using Real = typename Eigen::NumTraits<Scalar>::Real;

  BasicKet(Vector amplitudes, HilbertLayout layout)
      : amplitudes_(std::move(amplitudes)), layout_(std::move(layout)) {
    if (amplitudes_.size() != layout_.dim()) {
      throw std::invalid_argument("Ket: amplitude count does not match layout");
    }
  }

  const Vector& amplitudes() const { return amplitudes_; }
  const HilbertLayout& layout() const { return layout_; }
  Scalar operator[](Index i) const { return amplitudes_(i); }

  Real norm() const { return amplitudes_.norm(); }

  BasicKet normalized() const {
    const Real n = norm();
    if (!(n > Real(0))) {
      throw std::domain_error("Ket: cannot normalize a zero vector");
    }
    return BasicKet(amplitudes_ / n, layout_);
  }

 private:
  Vector amplitudes_;
  HilbertLayout layout_;
};

template <typename Scalar>
class BasicOperator {
 public:
  using Matrix = DenseMatrix<Scalar>;

  BasicOperator(Matrix matrix, HilbertLayout layout, std::string label = {})
      : matrix_(std::move(matrix)), layout_(std::move(layout)), label_(std::move(label)) {
    if (matrix_.rows() != layout_.dim() || matrix_.cols() != layout_.dim()) {
      throw std::invalid_argument("Operator: matrix dimension does not match layout");
    }
  }

  const Matrix& matrix() const { return matrix_; }
  const HilbertLayout& layout() const { return layout_; }
  const std::string& label() const { return label_; }

 private:
  Matrix matrix_;
  HilbertLayout layout_;
  std::string label_;
};

template <typename Scalar>
class BasicDensityOperator {
 public:
  using Matrix = DenseMatrix<Scalar>;
  using Real = typename Eigen::NumTraits<Scalar>::Real;

  BasicDensityOperator(Matrix matrix, HilbertLayout layout)
      : matrix_(std::move(matrix)), layout_(std::move(layout)) {
    if (matrix_.rows() != layout_.dim() || matrix_.cols() != layout_.dim()) {
      throw std::invalid_argument("DensityOperator: matrix dimension does not match layout");
    }
  }

  static BasicDensityOperator pure(const BasicKet<Scalar>& ket) {
    const auto psi = ket.normalized();
    return BasicDensityOperator(psi.amplitudes() * psi.amplitudes().adjoint(), psi.layout());
  }

  const Matrix& matrix() const { return matrix_; }
  const HilbertLayout& layout() const { return layout_; }
  Scalar trace() const { return matrix_.trace(); }

 private:
  Matrix matrix_;
  HilbertLayout layout_;
};

// ---------------------------------------------------------------------------
// Validity checks

template <typename Derived>
typename Derived::RealScalar hermiticity_error(const Eigen::MatrixBase<Derived>& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

template <typename Scalar>
typename Eigen::NumTraits<Scalar>::Real min_eigenvalue(const BasicDensityOperator<Scalar>& rho) {
  using Matrix = DenseMatrix<Scalar>;
  const Matrix h = (rho.matrix() + rho.matrix().adjoint()) / 2;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

struct DensityCheck {
  double hermiticity = 0;
  double trace_error = 0;
  double min_eigenvalue = 0;

  bool ok(double herm_tol = 1e-10, double trace_tol = 1e-8, double eig_floor = -1e-8) const {
    return hermiticity <= herm_tol && trace_error <= trace_tol && min_eigenvalue >= eig_floor;
  }
};

template <typename Scalar>
DensityCheck check_density(const BasicDensityOperator<Scalar>& rho) {
  DensityCheck c;
  c.hermiticity = static_cast<double>(hermiticity_error(rho.matrix()));
  c.trace_error = static_cast<double>(std::abs(rho.trace() - Scalar(1)));
  c.min_eigenvalue = static_cast<double>(min_eigenvalue(rho));
  return c;
}

// ---------------------------------------------------------------------------
// Elementary operators

template <typename Scalar = std::complex<double>>
BasicOperator<Scalar> fock_annihilation(Index n_fock) {
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  if (n_fock < 2) {
    throw std::invalid_argument("fock_annihilation: n_fock must be at least 2");
  }
  DenseMatrix<Scalar> a = DenseMatrix<Scalar>::Zero(n_fock, n_fock);
  for (Index n = 1; n < n_fock; ++n) {
    a(n - 1, n) = Scalar(std::sqrt(Real(n)));
  }
  return {std::move(a), HilbertLayout::cavity(n_fock), "a"};
}

template <typename Scalar = std::complex<double>>
BasicOperator<Scalar> number_operator(Index n_fock) {
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  DenseMatrix<Scalar> n = DenseMatrix<Scalar>::Zero(n_fock, n_fock);
  for (Index k = 0; k < n_fock; ++k) {
    n(k, k) = Scalar(Real(k));
  }
  return {std::move(n), HilbertLayout::cavity(n_fock), "n"};
}

/// exp(i pi a^dag a); maps |beta> to |-beta> exactly.
template <typename Scalar = std::complex<double>>
BasicOperator<Scalar> parity_operator(Index n_fock) {
  DenseMatrix<Scalar> p = DenseMatrix<Scalar>::Zero(n_fock, n_fock);
  for (Index k = 0; k < n_fock; ++k) {
    p(k, k) = Scalar(k % 2 == 0 ? 1 : -1);
  }
  return {std::move(p), HilbertLayout::cavity(n_fock), "parity"};
}

// Pauli matrices in the computational basis {|0>, |1>}. sigma_z = |1><1| - |0><0|,
// so the excited state carries eigenvalue +1.
template <typename Scalar = std::complex<double>>
BasicOperator<Scalar> sigma_z() {
  DenseMatrix<Scalar> m(2, 2);
  m << Scalar(-1), Scalar(0), Scalar(0), Scalar(1);
  return {std::move(m), HilbertLayout::qubit(), "sigma_z"};
}

template <typename Scalar = std::complex<double>>
BasicOperator<Scalar> sigma_x() {
  DenseMatrix<Scalar> m(2, 2);
  m << Scalar(0), Scalar(1), Scalar(1), Scalar(0);
  return {std::move(m), HilbertLayout::qubit(), "sigma_x"};
}

template <typename Scalar = std::complex<double>>
BasicOperator<Scalar> sigma_y() {
  DenseMatrix<Scalar> m(2, 2);
  m << Scalar(0), Scalar(0, -1), Scalar(0, 1), Scalar(0);
  return {std::move(m), HilbertLayout::qubit(), "sigma_y"};
}

template <typename Scalar = std::complex<double>>
BasicOperator<Scalar> hadamard() {
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  const Real s = Real(1) / std::sqrt(Real(2));
  DenseMatrix<Scalar> m(2, 2);
  m << Scalar(s), Scalar(s), Scalar(s), Scalar(-s);
  return {std::move(m), HilbertLayout::qubit(), "H"};
}

template <typename Scalar = std::complex<double>>
BasicOperator<Scalar> identity(const HilbertLayout& layout) {
  return {DenseMatrix<Scalar>::Identity(layout.dim(), layout.dim()), layout, "1"};
}

template <typename Scalar = std::complex<double>>
BasicKet<Scalar> basis_ket(const HilbertLayout& layout, Index i) {
  DenseVector<Scalar> v = DenseVector<Scalar>::Zero(layout.dim());
  v(i) = Scalar(1);
  return {std::move(v), layout};
}

// ---------------------------------------------------------------------------
// Coherent states

template <typename Real>
void check_truncation_bound(std::complex<Real> beta, Index n_fock) {
  if (std::norm(beta) > Real(n_fock) / Real(4)) {
    throw std::domain_error("coherent amplitude too large for the Fock cutoff (|beta|^2 > n_fock/4)");
  }
}

template <typename Scalar = std::complex<double>>
BasicKet<Scalar> coherent_state(Scalar beta, Index n_fock) {
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  if (n_fock < 1) {
    throw std::invalid_argument("coherent_state: n_fock must be positive");
  }
  check_truncation_bound(beta, n_fock);
  DenseVector<Scalar> c(n_fock);
  c(0) = Scalar(std::exp(-std::norm(beta) / Real(2)));
  for (Index n = 1; n < n_fock; ++n) {
    c(n) = c(n - 1) * beta / std::sqrt(Real(n));
  }
  c /= c.norm();
  return {std::move(c), HilbertLayout::cavity(n_fock)};
}

/// exp(beta a^dag - beta^* a) at the truncated dimension.
template <typename Scalar = std::complex<double>>
BasicOperator<Scalar> displacement_operator(Scalar beta, Index n_fock) {
  check_truncation_bound(beta, n_fock);
  const auto a = fock_annihilation<Scalar>(n_fock).matrix();
  const DenseMatrix<Scalar> generator = beta * a.adjoint() - std::conj(beta) * a;
  return {generator.exp(), HilbertLayout::cavity(n_fock), "D"};
}

/// |<alpha|beta>| for untruncated coherent states.
template <typename Real>
Real coherent_overlap_magnitude(std::complex<Real> alpha, std::complex<Real> beta) {
  return std::exp(-std::norm(alpha - beta) / Real(2));
}

// ---------------------------------------------------------------------------
// Tensor structure

template <typename Scalar>
BasicKet<Scalar> tensor(const BasicKet<Scalar>& lhs, const BasicKet<Scalar>& rhs) {
  std::vector<Index> factors = lhs.layout().factors();
  factors.insert(factors.end(), rhs.layout().factors().begin(), rhs.layout().factors().end());
  DenseVector<Scalar> v = Eigen::kroneckerProduct(lhs.amplitudes(), rhs.amplitudes()).eval();
  return {std::move(v), HilbertLayout(std::move(factors))};
}

template <typename Scalar>
BasicOperator<Scalar> tensor(const BasicOperator<Scalar>& lhs, const BasicOperator<Scalar>& rhs) {
  std::vector<Index> factors = lhs.layout().factors();
  factors.insert(factors.end(), rhs.layout().factors().begin(), rhs.layout().factors().end());
  DenseMatrix<Scalar> m = Eigen::kroneckerProduct(lhs.matrix(), rhs.matrix()).eval();
  return {std::move(m), HilbertLayout(std::move(factors)), lhs.label() + "(x)" + rhs.label()};
}

/// Places `op` on factor `index` of `layout`, identity elsewhere.
template <typename Scalar>
BasicOperator<Scalar> embed(const BasicOperator<Scalar>& op, std::size_t index, const HilbertLayout& layout) {
  if (index >= layout.size()) {
    throw std::invalid_argument("embed: subsystem index out of range");
  }
  if (op.matrix().rows() != layout.factor(index)) {
    throw std::invalid_argument("embed: operator dimension does not match the target factor");
  }
  Index before = 1;
  Index after = 1;
  for (std::size_t i = 0; i < index; ++i) before *= layout.factor(i);
  for (std::size_t i = index + 1; i < layout.size(); ++i) after *= layout.factor(i);
  using Matrix = DenseMatrix<Scalar>;
  Matrix m = Eigen::kroneckerProduct(
                 Matrix::Identity(before, before),
                 Eigen::kroneckerProduct(op.matrix(), Matrix::Identity(after, after)).eval())
                 .eval();
  return {std::move(m), layout, op.label()};
}

template <typename Scalar>
BasicDensityOperator<Scalar> partial_trace(const BasicDensityOperator<Scalar>& rho, std::vector<std::size_t> keep) {
  const HilbertLayout& layout = rho.layout();
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  if (keep.empty()) {
    throw std::invalid_argument("partial_trace: keep set must be nonempty");
  }
  if (keep.back() >= layout.size()) {
    throw std::invalid_argument("partial_trace: subsystem index out of range");
  }

  const std::size_t nf = layout.size();
  std::vector<Index> stride(nf);
  Index s = 1;
  for (std::size_t i = nf; i-- > 0;) {
    stride[i] = s;
    s *= layout.factor(i);
  }

  std::vector<std::size_t> traced;
  std::vector<Index> kept_dims;
  for (std::size_t i = 0; i < nf; ++i) {
    if (std::binary_search(keep.begin(), keep.end(), i)) {
      kept_dims.push_back(layout.factor(i));
    } else {
      traced.push_back(i);
    }
  }
  const HilbertLayout reduced_layout(kept_dims);

  // Offset in the full space of each reduced (kept) and environment (traced) index.
  auto offsets = [&](const std::vector<std::size_t>& which) {
    Index count = 1;
    for (std::size_t i : which) count *= layout.factor(i);
    std::vector<Index> out(static_cast<std::size_t>(count), 0);
    for (Index k = 0; k < count; ++k) {
      Index rem = k;
      Index off = 0;
      for (std::size_t j = which.size(); j-- > 0;) {
        const Index d = layout.factor(which[j]);
        off += (rem % d) * stride[which[j]];
        rem /= d;
      }
      out[static_cast<std::size_t>(k)] = off;
    }
    return out;
  };
  const auto kept_off = offsets(keep);
  const auto env_off = offsets(traced);

  const Index rd = reduced_layout.dim();
  DenseMatrix<Scalar> out = DenseMatrix<Scalar>::Zero(rd, rd);
  for (Index r = 0; r < rd; ++r) {
    for (Index c = 0; c < rd; ++c) {
      Scalar acc(0);
      for (Index e : env_off) {
        acc += rho.matrix()(kept_off[r] + e, kept_off[c] + e);
      }
      out(r, c) = acc;
    }
  }
  return {std::move(out), reduced_layout};
}

/// Total population in the highest `levels` Fock states of the cavity factor.
template <typename Scalar>
double top_fock_population(const BasicDensityOperator<Scalar>& rho, Index levels = 2) {
  const Index n = rho.layout().cavity_dim();
  const Index q = rho.layout().register_dim();
  double p = 0;
  for (Index k = 0; k < q; ++k) {
    for (Index m = std::max<Index>(0, n - levels); m < n; ++m) {
      p += static_cast<double>(std::real(rho.matrix()(k * n + m, k * n + m)));
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Sampling and figures of merit

/// Uniform (Haar) single-qubit pure state: cos(theta) ~ U[-1,1], phi ~ U[0,2pi),
/// global phase chosen so that <0|psi> is real and nonnegative.
template <typename Scalar = std::complex<double>, typename Urbg>
BasicKet<Scalar> haar_random_qubit(Urbg& rng) {
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  std::uniform_real_distribution<Real> cos_theta_dist(Real(-1), Real(1));
  std::uniform_real_distribution<Real> phi_dist(Real(0), Real(2) * std::numbers::pi_v<Real>);
  const Real cos_theta = cos_theta_dist(rng);
  const Real phi = phi_dist(rng);
  const Real c = std::sqrt((Real(1) + cos_theta) / Real(2));
  const Real s = std::sqrt(std::max(Real(0), (Real(1) - cos_theta) / Real(2)));
  DenseVector<Scalar> v(2);
  v << Scalar(c), std::polar(s, phi);
  return {std::move(v), HilbertLayout::qubit()};
}

/// <psi|rho|psi> for a pure target.
template <typename Scalar>
double fidelity(const BasicKet<Scalar>& psi, const BasicDensityOperator<Scalar>& rho) {
  if (psi.layout().dim() != rho.layout().dim()) {
    throw std::invalid_argument("fidelity: dimension mismatch");
  }
  const double f = static_cast<double>(std::real(psi.amplitudes().dot(rho.matrix() * psi.amplitudes())));
  constexpr double slack = 1e-12;
  if (f < -slack || f > 1 + slack) {
    throw std::domain_error("fidelity: overlap " + std::to_string(f) + " outside [0,1]; rho is not a valid state");
  }
  return std::clamp(f, 0.0, 1.0);
}

template <typename Scalar>
Scalar expectation(const BasicOperator<Scalar>& op, const BasicDensityOperator<Scalar>& rho) {
  return (op.matrix() * rho.matrix()).trace();
}

using Complex = std::complex<double>;
using CMatrix = DenseMatrix<Complex>;
using CVector = DenseVector<Complex>;
using Ket = BasicKet<Complex>;
using Operator = BasicOperator<Complex>;
using DensityOperator = BasicDensityOperator<Complex>;

}  // namespace qtele
