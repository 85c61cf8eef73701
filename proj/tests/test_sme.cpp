#include "qtele/sme.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace qtele;

namespace {

constexpr double kKappa = 1.0;
constexpr double kChi = 13.5;

Complex mean_field(const DensityOperator& rho) {
  const HilbertLayout& l = rho.layout();
  const CMatrix a = embed(fock_annihilation(l.cavity_dim()), l.cavity_index(), l).matrix();
  return (a * rho.matrix()).trace();
}

DensityOperator pinned_qubit(int qubit, Index n_fock) {
  return DensityOperator::pure(tensor(basis_ket(HilbertLayout::qubit(), qubit), basis_ket(HilbertLayout::cavity(n_fock), 0)));
}

// Solution of d beta/dt = -(i chi s + kappa / 2) beta - i eps from vacuum, for sigma_z = s.
Complex driven_amplitude(double chi, double s, Complex eps, double t) {
  const Complex rate(0.5 * kKappa, chi * s);
  return Complex(0, -1) * eps / rate * (1.0 - std::exp(-rate * t));
}

// Plain Euler step of the unconditioned master equation, written out from the generator.
CMatrix lindblad_euler(const CMatrix& rho, const CMatrix& h, const CMatrix& a, double dt) {
  const CMatrix ad = a.adjoint();
  const CMatrix dissipator = a * rho * ad - 0.5 * (ad * a * rho + rho * ad * a);
  return rho + (Complex(0, -1) * (h * rho - rho * h) + kKappa * dissipator) * dt;
}

}  // namespace

TEST(Hamiltonian, ZeroCouplingsGiveZero) {
  const Operator h = build_hamiltonian(PhaseSpec{1.0, 0, 0, {0, 0}, 0}, HilbertLayout::full(6));
  EXPECT_EQ(h.matrix().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Hamiltonian, DispersiveAndDriveTerms) {
  const HilbertLayout l = HilbertLayout::qubit_cavity(8);
  const Complex eps(2 * kChi, 0);
  const CMatrix h = build_hamiltonian(PhaseSpec{1.0, kChi, 0, eps, 0}, l).matrix();
  const CMatrix a = embed(fock_annihilation(8), 1, l).matrix();
  const CMatrix z = embed(sigma_z(), 0, l).matrix();
  const CMatrix expected = kChi * z * a.adjoint() * a + eps * a.adjoint() + std::conj(eps) * a;
  EXPECT_LT((h - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(build_hamiltonian(PhaseSpec{1.0, 0, 1.0, {0, 0}, 0}, l), std::invalid_argument);
}

TEST(SmeStep, UnmonitoredStepIgnoresNoise) {
  const Index n = 15;
  const HilbertLayout l = HilbertLayout::cavity(n);
  const DensityOperator rho = DensityOperator::pure(coherent_state(Complex(1.5, 0.4), n));
  const Operator h = build_hamiltonian(PhaseSpec{1.0, 0, 0, {0.7, -0.2}, 0}, l);
  const SmeParams p{kKappa, 0.0, 1e-3};
  const StepResult s1 = sme_step(rho, h, p, 0.03);
  const StepResult s2 = sme_step(rho, h, p, -0.05);
  EXPECT_EQ(s1.rho.matrix(), s2.rho.matrix());
  EXPECT_NEAR(s1.current, 0.03 / p.dt, 1e-12);

  const CMatrix euler = lindblad_euler(rho.matrix(), h.matrix(), fock_annihilation(n).matrix(), p.dt);
  EXPECT_LT((s1.rho.matrix() - euler).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(SmeStep, MonitoredStepMatchesInnovationToFirstOrder) {
  const Index n = 15;
  const HilbertLayout l = HilbertLayout::cavity(n);
  const CMatrix rho = DensityOperator::pure(coherent_state(Complex(0.9, -0.3), n)).matrix();
  const Operator h = build_hamiltonian(PhaseSpec{1.0, 0, 0, {0.4, 0}, 0}, l);
  const SmeParams p{kKappa, 1.0, 1e-4};
  const double dW = std::sqrt(p.dt);  // dW^2 = dt
  const CMatrix a = fock_annihilation(n).matrix();
  const double x = std::real((a * rho + rho * a.adjoint()).trace());
  const CMatrix innovation = (a * rho + rho * a.adjoint() - x * rho) * dW;
  const CMatrix expected = lindblad_euler(rho, h.matrix(), a, p.dt) + innovation;
  const StepResult s = sme_step(DensityOperator(rho, l), h, p, dW);
  EXPECT_LT((s.rho.matrix() - expected).cwiseAbs().maxCoeff(), 2e-5);
  EXPECT_NEAR(s.current, x + dW / p.dt, 1e-12);
}

TEST(SmeStep, PreservesStateValidity) {
  const Index n = 12;
  DensityOperator rho = DensityOperator::pure(coherent_state(Complex(1.0), n));
  const Operator h = build_hamiltonian(PhaseSpec{1.0, 0, 0, {2.0, 0}, 0}, HilbertLayout::cavity(n));
  Rng rng(4);
  std::normal_distribution<double> noise(0, std::sqrt(1e-3));
  for (int i = 0; i < 500; ++i) rho = sme_step(rho, h, SmeParams{kKappa, 1.0, 1e-3}, noise(rng)).rho;
  const DensityCheck c = check_density(rho);
  EXPECT_LT(c.hermiticity, 1e-10);
  EXPECT_LT(c.trace_error, 1e-8);
  EXPECT_GT(c.min_eigenvalue, -1e-8);
}

TEST(SmeParamsCheck, RejectsBadValues) {
  EXPECT_THROW((SmeParams{0.0, 1.0, 1e-3}).validate(), std::invalid_argument);
  EXPECT_THROW((SmeParams{1.0, 1.5, 1e-3}).validate(), std::invalid_argument);
  EXPECT_THROW((SmeParams{1.0, 1.0, 0.02}).validate(), std::invalid_argument);
  EXPECT_NO_THROW((SmeParams{1.0, 0.0, 0.01}).validate());
}

TEST(SimulatePhase, ZeroDurationReturnsInput) {
  const DensityOperator rho = DensityOperator::pure(coherent_state(Complex(1.0), 10));
  Rng rng(1);
  const PhaseResult r = simulate_phase(rho, PhaseSpec{0.0, 0, 0, {0, 0}, 0}, SmeParams{}, rng);
  EXPECT_EQ(r.rho.matrix(), rho.matrix());
  EXPECT_TRUE(r.samples.empty());
}

TEST(SimulatePhase, DampedCoherentAmplitude) {
  const Index n = 30;
  const double beta = 2.0;
  DensityOperator rho = DensityOperator::pure(coherent_state(Complex(beta), n));
  const SmeParams p{kKappa, 0.0, 1e-3};
  Rng rng(9);
  double worst = 0;
  for (int k = 1; k <= 30; ++k) {
    rho = simulate_phase(rho, PhaseSpec{0.1, 0, 0, {0, 0}, 0}, p, rng).rho;
    const double t = 0.1 * k;
    const Complex expected = beta * std::exp(-0.5 * kKappa * t);
    worst = std::max(worst, std::abs(mean_field(rho) - expected) / std::abs(expected));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(SimulatePhase, HalvingStepShrinksDeterministicError) {
  const Index n = 25;
  const DensityOperator rho0 = DensityOperator::pure(coherent_state(Complex(2.0), n));
  const PhaseSpec phase{1.0, 0, 0, {0, 0}, 0};
  auto error_at = [&](double dt) {
    Rng rng(1);
    const DensityOperator rho = simulate_phase(rho0, phase, SmeParams{kKappa, 0.0, dt}, rng).rho;
    return std::abs(mean_field(rho) - 2.0 * std::exp(-0.5));
  };
  EXPECT_LT(error_at(5e-4), error_at(1e-3));
}

TEST(SimulatePhase, DrivenFieldMatchesMeanField) {
  const Index n = 40;
  const Complex eps(2 * kChi, 0);
  for (int qubit : {0, 1}) {
    const double s = qubit == 0 ? -1.0 : 1.0;
    Rng rng(3);
    const PhaseResult r =
        simulate_phase(pinned_qubit(qubit, n), PhaseSpec{5.0, kChi, 0, eps, 0}, SmeParams{kKappa, 0.0, 1e-3}, rng);
    const Complex expected = driven_amplitude(kChi, s, eps, 5.0);
    EXPECT_LT(std::abs(mean_field(r.rho) - expected) / std::abs(expected), 0.02) << "qubit " << qubit;
    EXPECT_LT(r.max_truncation_population, 1e-6);
  }
}

TEST(SimulatePhase, QubitStateSetsSignOfLateCurrent) {
  const Index n = 30;
  const Complex eps(2 * kChi, 0);
  double late[2] = {0, 0};
  for (int qubit : {0, 1}) {
    Rng rng(17 + qubit);
    const PhaseResult r =
        simulate_phase(pinned_qubit(qubit, n), PhaseSpec{3.0, kChi, 0, eps, 0}, SmeParams{kKappa, 1.0, 1e-3}, rng);
    late[qubit] = std::accumulate(r.samples.begin() + 1000, r.samples.end(), 0.0) / (r.samples.size() - 1000);
    EXPECT_NEAR(std::real(r.rho.trace()), 1.0, 1e-8);
  }
  EXPECT_GT(late[0], 0.0);
  EXPECT_LT(late[1], 0.0);
}

TEST(SimulatePhase, SameSeedSameRecord) {
  const DensityOperator rho = DensityOperator::pure(coherent_state(Complex(1.0), 20));
  Rng a(42), b(42);
  const PhaseSpec phase{0.2, 0, 0, {1.0, 0}, 0};
  const PhaseResult ra = simulate_phase(rho, phase, SmeParams{}, a);
  const PhaseResult rb = simulate_phase(rho, phase, SmeParams{}, b);
  EXPECT_EQ(ra.samples, rb.samples);
  EXPECT_EQ(ra.rho.matrix(), rb.rho.matrix());
}

TEST(Noise, VacuumCurrentStatistics) {
  const Index n = 4;
  const double dt = 1e-3;
  Rng rng(2718);
  const PhaseResult r = simulate_phase(DensityOperator::pure(basis_ket(HilbertLayout::cavity(n), 0)),
                                       PhaseSpec{10.0, 0, 0, {0, 0}, 0}, SmeParams{kKappa, 1.0, dt}, rng);
  ASSERT_EQ(r.samples.size(), 10000u);
  double sum = 0, sum2 = 0;
  for (double j : r.samples) {
    sum += j * dt;
    sum2 += j * dt * j * dt;
  }
  const double count = static_cast<double>(r.samples.size());
  const double mean = sum / count;
  const double var = sum2 / count - mean * mean;
  EXPECT_LT(std::abs(mean), 3 * std::sqrt(dt / count));
  EXPECT_NEAR(var / dt, 1.0, 0.05);
  EXPECT_LT(std::abs(mean_field(r.rho)), 1e-12);
}

TEST(Integrators, TieBreakAndOddness) {
  HomodyneRecord rec{1e-3, 1.0, 1.0, std::vector<double>(100, 0.0), {40, 100}};
  EXPECT_EQ(integrate_s_beta(rec), 1);
  EXPECT_EQ(integrate_s_a(rec, 0.01), 1);
  for (std::size_t i = 0; i < 100; ++i) rec.samples[i] = std::sin(0.37 * i) + (i < 40 ? 0.2 : -0.3);
  const int sb = integrate_s_beta(rec);
  const int sa = integrate_s_a(rec, 0.01);
  for (double& j : rec.samples) j = -j;
  EXPECT_EQ(integrate_s_beta(rec), -sb);
  EXPECT_EQ(integrate_s_a(rec, 0.01), -sa);
  EXPECT_THROW(integrate_s_a(rec, 0.06), std::invalid_argument);
}

TEST(Integrators, FieldSignRecoveredFromDecay) {
  const Index n = 30;
  const double t_beta = 0.8;
  const DensityOperator rho = DensityOperator::pure(coherent_state(Complex(2.0), n));
  int hits = 0;
  const int runs = 500;
  for (int i = 0; i < runs; ++i) {
    Rng rng = make_stream(100, {static_cast<std::uint64_t>(i)});
    PhaseResult r = simulate_phase(rho, PhaseSpec{t_beta, 0, 0, {0, 0}, 0}, SmeParams{kKappa, 1.0, 1e-3}, rng);
    const std::size_t count = r.samples.size();
    const HomodyneRecord rec{1e-3, 1.0, kKappa, std::move(r.samples), {count}};
    hits += integrate_s_beta(rec) == 1;
  }
  EXPECT_GE(hits, static_cast<int>(0.95 * runs));
}

TEST(Integrators, ExcitedQubitGivesNegativeSign) {
  const Index n = 20;
  const DensityOperator rho = pinned_qubit(1, n);
  int hits = 0;
  const int runs = 500;
  for (int i = 0; i < runs; ++i) {
    Rng rng = make_stream(200, {static_cast<std::uint64_t>(i)});
    PhaseResult r =
        simulate_phase(rho, PhaseSpec{1.2, kChi, 0, {2 * kChi, 0}, 0}, SmeParams{kKappa, 1.0, 1e-3}, rng);
    const std::size_t count = r.samples.size();
    const HomodyneRecord rec{1e-3, 1.0, kKappa, std::move(r.samples), {0, count}};
    hits += integrate_s_a(rec, 0.3) == -1;
  }
  EXPECT_GE(hits, static_cast<int>(0.95 * runs));
}
