// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if all pass.

#include "qtele/experiment.hpp"
#include "qtele/pqs.hpp"
#include "qtele/sme.hpp"
#include "qtele/teleport.hpp"
#include "qtele/transmon.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace qtele;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

// Upper tail of the chi-square distribution with three degrees of freedom.
double chi2_sf_df3(double x) {
  if (x <= 0) return 1.0;
  return std::erfc(std::sqrt(x / 2)) + std::sqrt(2 * x / std::numbers::pi) * std::exp(-x / 2);
}

double uniformity_stat(const std::array<int, 4>& counts) {
  double n = 0;
  for (int c : counts) n += c;
  double x = 0;
  for (int c : counts) x += (c - n / 4) * (c - n / 4) / (n / 4);
  return x;
}

double homogeneity_stat(const std::array<int, 4>& a, const std::array<int, 4>& b) {
  double na = 0, nb = 0;
  for (int i = 0; i < 4; ++i) {
    na += a[i];
    nb += b[i];
  }
  double x = 0;
  for (int i = 0; i < 4; ++i) {
    const double col = a[i] + b[i];
    if (col == 0) continue;
    const double ea = col * na / (na + nb), eb = col * nb / (na + nb);
    x += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
  }
  return x;
}

Complex mean_field(const DensityOperator& rho) {
  const Index n = rho.layout().cavity_dim();
  return (fock_annihilation(n).matrix() * rho.matrix()).trace();
}

Verdict transmon_calibration() {
  using namespace transmon;
  const double chi = dispersive_shift(mhz(31), -mhz(250), mhz(300));
  const double err = std::abs(std::abs(chi) - mhz(2.1));
  return {err <= mhz(0.05), "|chi| = 2pi x " + fmt(std::abs(to_mhz(chi))) + " MHz"};
}

Verdict lindblad_oracle() {
  const Index n = 30;
  const double beta = 2.0;
  DensityOperator rho = DensityOperator::pure(coherent_state(Complex(beta), n));
  const SmeParams p{1.0, 0.0, 1e-3};
  Rng rng(1);
  double worst = 0;
  for (int k = 1; k <= 300; ++k) {
    rho = simulate_phase(rho, PhaseSpec{0.01, 0, 0, {0, 0}, 0}, p, rng).rho;
    const Complex expected = beta * std::exp(-0.5 * p.kappa * 0.01 * k);
    worst = std::max(worst, std::abs(mean_field(rho) - expected) / std::abs(expected));
  }
  return {worst < 1e-3, "max relative error " + fmt(worst, 3)};
}

Verdict noise_statistics() {
  const double dt = 1e-3;
  Rng rng(3);
  const PhaseResult r = simulate_phase(DensityOperator::pure(basis_ket(HilbertLayout::cavity(4), 0)),
                                       PhaseSpec{10.0, 0, 0, {0, 0}, 0}, SmeParams{1.0, 1.0, dt}, rng);
  const double n = static_cast<double>(r.samples.size());
  double sum = 0, sum2 = 0;
  for (double j : r.samples) {
    sum += j * dt;
    sum2 += (j * dt) * (j * dt);
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double sigma = std::sqrt(var / n);
  const bool ok = r.samples.size() == 10000 && std::abs(var / dt - 1) <= 0.05 && std::abs(mean) <= 3 * sigma;
  return {ok, "var/dt = " + fmt(var / dt, 4) + ", mean/sigma = " + fmt(mean / sigma, 3)};
}

Verdict projective_oracle() {
  double sum = 0;
  const int runs = 500;
  for (int i = 0; i < runs; ++i) {
    Rng rng = make_stream(4, {2, static_cast<std::uint64_t>(i)});
    sum += run_projective_oracle(2.0, 40, input_state(4, i), rng).fidelity;
  }
  return {sum / runs >= 0.99, "mean fidelity " + fmt(sum / runs)};
}

Verdict random_guess_baseline() {
  ProtocolConfig c;
  c.eta = 0.0;
  c.n_states = 500;
  c.seed = 5;
  const EnsembleResult r = run_ensemble(c);
  const double d = r.estimate(Strategy::Direct).mean;
  const double q = r.estimate(Strategy::Pqs).mean;
  const bool ok = std::abs(d - 0.5) <= 0.05 && std::abs(q - 0.5) <= 0.05;
  return {ok, "direct " + fmt(d, 4) + ", pqs " + fmt(q, 4) + " (n = 500)"};
}

Verdict pqs_advantage() {
  ProtocolConfig c;
  c.n_states = 300;
  c.seed = 6;
  const std::vector<double> etas{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<std::array<FidelityEstimate, 2>> curve;
  std::vector<double> diffs;
  std::ostringstream detail;
  for (double eta : etas) {
    c.eta = eta;
    const EnsembleResult r = run_ensemble(c);
    curve.push_back(r.estimates);
    detail << "eta " << eta << ": direct " << fmt(r.estimate(Strategy::Direct).mean, 4) << " pqs "
           << fmt(r.estimate(Strategy::Pqs).mean, 4) << "; ";
    if (eta == 1.0) {
      for (const auto& run : r.runs) diffs.push_back(run.fidelity(Strategy::Pqs) - run.fidelity(Strategy::Direct));
    }
  }
  const FidelityEstimate paired = summarize(diffs);
  std::size_t disagreements = 0;
  for (double d : diffs) disagreements += d != 0;
  const bool advantage = paired.mean > 0 && paired.mean > 2 * paired.std_error;

  bool monotone = true;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    for (std::size_t s = 0; s < 2; ++s) {
      const double se = std::hypot(curve[i][s].std_error, curve[i + 1][s].std_error);
      if (curve[i + 1][s].mean < curve[i][s].mean - 2 * se) monotone = false;
    }
  }
  detail << "paired diff at eta 1 = " << fmt(paired.mean, 3) << " +- " << fmt(paired.std_error, 3) << " ("
         << disagreements << "/" << diffs.size() << " runs differ); monotone in eta: " << (monotone ? "yes" : "no");
  return {advantage && monotone, detail.str()};
}

Verdict retrodiction_consistency() {
  ProtocolConfig c;
  c.total_time = 3.0;
  c.eta = 1.0;
  const int per_label = 300;
  std::ostringstream detail;
  bool ok = true;
  for (BellOutcome o : BellOutcome::all()) {
    const Ket initial = tensor(basis_ket(HilbertLayout::qubit(), o.qubit), coherent_state(Complex(o.field_sign * c.beta), c.n_fock));
    int hits = 0;
    for (int i = 0; i < per_label; ++i) {
      Rng rng = make_stream(7, {o.index(), static_cast<std::uint64_t>(i)});
      const ForwardRun fwd = simulate_record(c, initial, rng);
      hits += decide(fwd.record, c).pqs == o;
    }
    const double rate = static_cast<double>(hits) / per_label;
    ok = ok && rate >= 0.95;
    detail << o.label() << " " << fmt(rate, 4) << " ";
  }
  return {ok, "recovery " + detail.str()};
}

Verdict exact_invariants() {
  ProtocolConfig c;
  c.seed = 8;
  Rng rng = make_stream(8, {1, 0, 0});
  const RunResult run = run_trajectory(c, input_state(8, 0), rng);
  const EffectMatrix e = propagate_backward(run.record, c.phases(), c.n_fock);
  const DensityOperator prior = uniform_bell_prior(c.beta, c.n_fock);
  const BellPovm povm = build_bell_povm(c.beta, c.n_fock);
  const auto base = retrodict(prior, e, povm);
  if (!base) return {false, "retrodiction degenerate"};

  double sum = 0;
  for (double p : base->probabilities) sum += p;
  const bool normalized = std::abs(sum - 1) <= 1e-10;

  bool scale_exact = true;
  for (double scale : {0.5, 4.0, 1024.0, 0x1p-40}) {
    const auto r = retrodict(prior, EffectMatrix(scale * e.matrix(), e.layout()), povm);
    scale_exact = scale_exact && r && r->probabilities == base->probabilities && r->argmax == base->argmax;
  }
  double scale_dev = 0;
  for (double scale : {3.7, 1e-9, 2.5e7}) {
    const auto r = retrodict(prior, EffectMatrix(scale * e.matrix(), e.layout()), povm);
    for (std::size_t i = 0; i < 4; ++i) scale_dev = std::max(scale_dev, std::abs(r->probabilities[i] - base->probabilities[i]));
  }

  // Orthogonal POVM with E = 1: Fock |0>, |1> in place of the coherent states.
  const Index n = c.n_fock;
  const HilbertLayout l = HilbertLayout::qubit_cavity(n);
  BellPovm ortho = povm;
  for (BellOutcome o : BellOutcome::all()) {
    const CVector v = tensor(basis_ket(HilbertLayout::qubit(), o.qubit), basis_ket(HilbertLayout::cavity(n), o.field_sign > 0 ? 0 : 1)).amplitudes();
    ortho.elements[o.index()] = Operator(v * v.adjoint(), l);
  }
  CMatrix rho = 0.1 * CMatrix::Identity(l.dim(), l.dim()) / static_cast<double>(l.dim());
  rho(0, 0) += 0.5;
  rho(1, 1) += 0.2;
  rho(n, n) += 0.15;
  rho(n + 1, n + 1) += 0.05;
  rho(0, n + 1) = rho(n + 1, 0) = 0.03;
  const DensityOperator state(rho / rho.trace().real(), l);
  const auto born = retrodict(state, EffectMatrix::identity(l), ortho);
  double total = 0;
  std::array<double, 4> forward{};
  for (BellOutcome o : BellOutcome::all()) {
    const Index k = o.qubit * n + (o.field_sign > 0 ? 0 : 1);
    forward[o.index()] = state.matrix()(k, k).real();
    total += forward[o.index()];
  }
  double born_dev = 0;
  for (std::size_t i = 0; i < 4; ++i) born_dev = std::max(born_dev, std::abs(born->probabilities[i] - forward[i] / total));

  const bool ok = normalized && scale_exact && scale_dev <= 1e-15 && born_dev <= 1e-15;
  return {ok, "|sum - 1| = " + fmt(std::abs(sum - 1), 3) + ", power-of-two scaling bitwise equal: " +
                  (scale_exact ? "yes" : "no") + ", other scalings max dev " + fmt(scale_dev, 3) +
                  ", Born rule dev " + fmt(born_dev, 3)};
}

Verdict no_signaling() {
  ProtocolConfig c;
  CVector plus(2), zero(2);
  zero << 1, 0;
  plus << 1 / std::sqrt(2.0), Complex(0, 1) / std::sqrt(2.0);
  const std::array<Ket, 2> inputs{Ket(zero, HilbertLayout::qubit()), Ket(plus, HilbertLayout::qubit())};
  const int runs = 500;
  std::array<std::array<std::array<int, 4>, 2>, 2> counts{};  // [strategy][input][outcome]
  for (std::size_t k = 0; k < 2; ++k) {
    for (int i = 0; i < runs; ++i) {
      Rng rng = make_stream(9, {k, static_cast<std::uint64_t>(i)});
      const RunResult r = run_trajectory(c, inputs[k], rng);
      for (Strategy s : {Strategy::Direct, Strategy::Pqs}) {
        ++counts[static_cast<std::size_t>(s)][k][r.decisions.chosen(s).index()];
      }
    }
  }
  bool ok = true;
  std::ostringstream detail;
  for (Strategy s : {Strategy::Direct, Strategy::Pqs}) {
    const auto& cs = counts[static_cast<std::size_t>(s)];
    const double p0 = chi2_sf_df3(uniformity_stat(cs[0]));
    const double p1 = chi2_sf_df3(uniformity_stat(cs[1]));
    const double ph = chi2_sf_df3(homogeneity_stat(cs[0], cs[1]));
    ok = ok && p0 > 0.01 && p1 > 0.01 && ph > 0.01;
    detail << to_string(s) << ": uniform p = " << fmt(p0, 3) << ", " << fmt(p1, 3) << ", same-distribution p = "
           << fmt(ph, 3) << "; ";
  }
  return {ok, detail.str()};
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(QTELE_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism() {
  const fs::path dir = fs::temp_directory_path() / "qtele_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "run.cfg") << "n_states = 6\nsweep = eta\ngrid = 0.5, 1.0\n";
  const std::string cfg = "--config " + (dir / "run.cfg").string() + " --seed 10";
  const int a = run_cli("run " + cfg + " --workers 1 --out " + (dir / "a").string());
  const int b = run_cli("run " + cfg + " --workers 1 --out " + (dir / "b").string());
  const int w = run_cli("run " + cfg + " --workers 3 --out " + (dir / "w").string());
  const int s1 = run_cli("sweep-eta " + cfg + " --workers 1 --out " + (dir / "s1").string());
  const int s2 = run_cli("sweep-eta " + cfg + " --workers 2 --out " + (dir / "s2").string());
  const std::string ra = slurp(dir / "a" / "results.csv");
  const std::string rs = slurp(dir / "s1" / "results.csv");
  const bool ok = a == 0 && b == 0 && w == 0 && s1 == 0 && s2 == 0 && !ra.empty() && !rs.empty() &&
                  ra == slurp(dir / "b" / "results.csv") && ra == slurp(dir / "w" / "results.csv") &&
                  rs == slurp(dir / "s2" / "results.csv");
  fs::remove_all(dir);
  return {ok, "results.csv identical across repeats and worker counts: " + std::string(ok ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"transmon dispersive shift", transmon_calibration},
      {"unmonitored damping matches closed form", lindblad_oracle},
      {"homodyne noise statistics", noise_statistics},
      {"projective-measurement teleportation", projective_oracle},
      {"random-guess baseline at eta = 0", random_guess_baseline},
      {"retrodiction advantage and eta trend", pqs_advantage},
      {"retrodiction recovers prepared labels", retrodiction_consistency},
      {"retrodiction invariants", exact_invariants},
      {"no-signaling", no_signaling},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << i + 1 << " (" << criteria[i].first << "): " << v.detail
              << " [" << fmt(secs, 3) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
