#include "qtele/transmon.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace qtele::transmon {

void FluxPulse::validate() const {
  if (!(tau > 0)) throw std::invalid_argument("FluxPulse: tau must be positive");
  if (!(t1 >= t0)) throw std::invalid_argument("FluxPulse: plateau end precedes its start");
}

double qubit_frequency(double e_j, double e_c) {
  if (!(e_j > 0) || !(e_c > 0)) throw std::invalid_argument("qubit_frequency: E_J and E_C must be positive");
  return std::sqrt(8.0 * e_j * e_c) - e_c;
}

double anharmonicity(double e_c) {
  if (!(e_c > 0)) throw std::invalid_argument("anharmonicity: E_C must be positive");
  return -e_c;
}

double dispersive_shift(double g, double delta, double e_c) {
  if (delta == 0 || delta == e_c) {
    throw std::domain_error("dispersive_shift: detuning sits on a pole (Delta = 0 or Delta = E_C)");
  }
  return -g * g * e_c / (delta * (delta - e_c));
}

bool in_dispersive_regime(double g, double delta) { return std::abs(delta) > 3.0 * std::abs(g); }

double josephson_energy(double e_j0, double phi_x) { return e_j0 * std::abs(std::cos(phi_x)); }

double detuning_profile(const FluxPulse& p, double t) {
  if (t < p.t0) return p.delta0 - p.delta_t * std::exp(-std::pow((t - p.t0) / p.tau, 2));
  if (t <= p.t1) return p.delta0 - p.delta_t;
  return p.delta0 - p.delta_t * std::exp(-std::pow((t - p.t1) / p.tau, 2));
}

double accumulated_phase(const FluxPulse& p, double g, double e_c, int steps_per_tau) {
  p.validate();
  if (steps_per_tau < 1) throw std::invalid_argument("accumulated_phase: steps_per_tau must be positive");
  // Delta(t) moves monotonically between delta0 and delta0 - delta_t.
  const double lo = std::min(p.delta0, p.delta0 - p.delta_t);
  const double hi = std::max(p.delta0, p.delta0 - p.delta_t);
  for (double pole : {0.0, e_c}) {
    if (pole >= lo && pole <= hi) {
      throw std::domain_error("accumulated_phase: detuning crosses a pole of the dispersive shift");
    }
  }

  auto integrand = [&](double t) { return 2.0 * dispersive_shift(g, detuning_profile(p, t), e_c); };
  const int n = 5 * steps_per_tau;
  const double h = p.tau / steps_per_tau;
  auto tail = [&](double from) {
    double acc = 0.5 * (integrand(from) + integrand(from + n * h));
    for (int k = 1; k < n; ++k) acc += integrand(from + k * h);
    return acc * h;
  };
  const double left = tail(p.t0 - 5.0 * p.tau);
  const double right = tail(p.t1);
  const double plateau = 2.0 * dispersive_shift(g, p.delta0 - p.delta_t, e_c) * (p.t1 - p.t0);
  return left + plateau + right;
}

GateTime solve_gate_time(const FluxPulse& pulse_template, double g, double e_c, double target_phase,
                         int steps_per_tau) {
  GateTime out;
  out.chi_plateau = dispersive_shift(g, pulse_template.delta0 - pulse_template.delta_t, e_c);
  if (out.chi_plateau == 0) throw std::domain_error("solve_gate_time: plateau dispersive shift is zero");
  out.reference_half = std::numbers::pi / (2.0 * std::abs(out.chi_plateau));
  out.reference_full = std::numbers::pi / std::abs(out.chi_plateau);

  auto residual = [&](double length) {
    FluxPulse p = pulse_template;
    p.t1 = p.t0 + length;
    return accumulated_phase(p, g, e_c, steps_per_tau) - target_phase;
  };
  double a = 0;
  double b = 10.0 / std::abs(out.chi_plateau);
  double fa = residual(a);
  const double fb = residual(b);
  if ((fa < 0) == (fb < 0)) {
    throw std::domain_error("solve_gate_time: target phase is not bracketed by (0, 10/|chi|)");
  }
  double mid = a;
  double fm = fa;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (a + b);
    fm = residual(mid);
    if (std::abs(fm) < 1e-6 && (b - a) < 1e-6 * b) break;
    if ((fm < 0) == (fa < 0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  if (std::abs(fm) >= 1e-6) throw std::domain_error("solve_gate_time: bisection did not converge");
  out.t_pi = mid;
  out.achieved_phase = fm + target_phase;
  return out;
}

CalibrationReport calibrate(const CalibrationInputs& in) {
  CalibrationReport r;
  const double e_j = in.ej_over_ec * in.e_c;
  r.omega = qubit_frequency(e_j, in.e_c);
  r.omega_plasma = std::sqrt(8.0 * e_j * in.e_c);
  r.alpha = anharmonicity(in.e_c);
  r.kappa = in.kappa;
  r.chi_plateau = dispersive_shift(in.g, in.delta_plateau, in.e_c);

  // Parking lowers the qubit frequency, moving the detuning further below the
  // resonator by the pulse depth.
  r.delta_parked = in.delta_plateau - in.pulse_depth;
  r.chi_parked = dispersive_shift(in.g, r.delta_parked, in.e_c);
  const double ej_parked = josephson_energy(e_j, in.phi_x_parked);
  r.ej_parked_over_ec = ej_parked / in.e_c;
  r.flux_pulse_depth = r.omega - qubit_frequency(ej_parked, in.e_c);

  FluxPulse pulse{r.delta_parked, r.delta_parked - in.delta_plateau, in.tau, 0.0, 0.0};
  r.gate = solve_gate_time(pulse, in.g, in.e_c);

  if (in.ej_over_ec < 20) r.warnings.push_back("E_J/E_C below 20 at zero flux; transmon approximations degrade");
  if (r.ej_parked_over_ec < 20) r.warnings.push_back("E_J/E_C below 20 at the parking flux");
  if (!in_dispersive_regime(in.g, in.delta_plateau)) r.warnings.push_back("plateau detuning within 3g of resonance");
  if (std::abs(r.chi_parked) >= in.kappa) r.warnings.push_back("parked dispersive shift not below kappa");
  if (std::abs(r.omega_plasma - r.omega) > 0.01 * r.omega) {
    std::ostringstream w;
    w << std::fixed << std::setprecision(3) << "qubit frequency with the -E_C term is 2pi x " << to_mhz(r.omega) / 1e3
      << " GHz; sqrt(8 E_J E_C) alone is 2pi x " << to_mhz(r.omega_plasma) / 1e3 << " GHz";
    r.warnings.push_back(w.str());
  }
  return r;
}

std::string format_report(const CalibrationReport& r) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(4);
  o << "transmon calibration (frequencies as 2pi x MHz)\n";
  o << "  Omega = sqrt(8 E_J E_C) - E_C    " << to_mhz(r.omega) << "\n";
  o << "  sqrt(8 E_J E_C)                  " << to_mhz(r.omega_plasma) << "\n";
  o << "  alpha                            " << to_mhz(r.alpha) << "\n";
  o << "  chi (plateau)                    " << to_mhz(r.chi_plateau) << "\n";
  o << "  chi (parked)                     " << to_mhz(r.chi_parked) << "\n";
  o << "  Delta (parked)                   " << to_mhz(r.delta_parked) << "\n";
  o << "  E_J/E_C (parked)                 " << r.ej_parked_over_ec << "\n";
  o << "  flux-derived pulse depth         " << to_mhz(r.flux_pulse_depth) << "\n";
  o << "  |chi (plateau)| / kappa          " << std::abs(r.chi_plateau) / r.kappa << "\n";
  o << std::setprecision(3);
  o << "  t_pi (solved, phase = -pi) [ns]  " << r.gate.t_pi * 1e9 << "\n";
  o << "  pi / (2|chi|) [ns]               " << r.gate.reference_half * 1e9 << "\n";
  o << "  pi / |chi| [ns]                  " << r.gate.reference_full * 1e9 << "\n";
  for (const auto& w : r.warnings) o << "  warning: " << w << "\n";
  return o.str();
}

}  // namespace qtele::transmon
