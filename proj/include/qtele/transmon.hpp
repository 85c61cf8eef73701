#pragma once

// Transmon calibration arithmetic for the flux-pulsed dispersive phase gate.
// All energies and frequencies are angular frequencies (rad/s, hbar = 1) and
// times are seconds. Use mhz() to enter values quoted as 2 pi x MHz.

#include <numbers>
#include <string>
#include <vector>

namespace qtele::transmon {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// 2 pi x f[MHz] in rad/s.
constexpr double mhz(double f) { return two_pi * f * 1e6; }
/// rad/s expressed as f in "2 pi x MHz".
constexpr double to_mhz(double omega) { return omega / (two_pi * 1e6); }

struct TransmonParams {
  double e_c = mhz(300);
  double e_j0 = 75 * mhz(300);
  double g = mhz(31);
  double omega_r = 0;
  double phi_x = 0;
};

/// Gaussian-edged flux pulse: detuning parked at delta0, pulled to
/// delta0 - delta_t on the plateau [t0, t1].
struct FluxPulse {
  double delta0 = 0;
  double delta_t = 0;
  double tau = 10e-9;
  double t0 = 0;
  double t1 = 0;

  void validate() const;
};

/// sqrt(8 E_J E_C) - E_C
double qubit_frequency(double e_j, double e_c);

/// -E_C
double anharmonicity(double e_c);

/// Three-level dispersive shift -g^2 E_C / (Delta (Delta - E_C)), Delta = Omega - omega_r.
double dispersive_shift(double g, double delta, double e_c);

/// |Delta| > 3 g; outside this the dispersive formula is unreliable.
bool in_dispersive_regime(double g, double delta);

/// E_J(0) |cos phi_x|
double josephson_energy(double e_j0, double phi_x);

double detuning_profile(const FluxPulse& pulse, double t);

/// Integral of 2 chi(t) over [t0 - 5 tau, t1 + 5 tau]. Tails use the composite
/// trapezoid rule with step tau / steps_per_tau; the plateau integrand is
/// constant and integrated exactly.
double accumulated_phase(const FluxPulse& pulse, double g, double e_c, int steps_per_tau = 100);

struct GateTime {
  double t_pi = 0;              // solved plateau length t1 - t0
  double chi_plateau = 0;
  double reference_half = 0;    // pi / (2 |chi_plateau|)
  double reference_full = 0;    // pi / |chi_plateau|
  double achieved_phase = 0;
};

/// Bisection on the plateau length t1 - t0 in (0, 10 / |chi_plateau|) until the
/// accumulated phase is within 1e-6 rad of `target_phase`.
GateTime solve_gate_time(const FluxPulse& pulse_template, double g, double e_c,
                         double target_phase = -std::numbers::pi, int steps_per_tau = 100);

struct CalibrationInputs {
  double e_c = mhz(300);
  double ej_over_ec = 75;
  double g = mhz(31);
  double kappa = mhz(0.15);
  double delta_plateau = -mhz(250);
  double pulse_depth = mhz(1900);
  double phi_x_parked = 0.3 * std::numbers::pi;
  double tau = 10e-9;
};

struct CalibrationReport {
  double omega = 0;             // sqrt(8 E_J E_C) - E_C
  double omega_plasma = 0;      // sqrt(8 E_J E_C)
  double alpha = 0;
  double chi_plateau = 0;
  double chi_parked = 0;
  double delta_parked = 0;
  double flux_pulse_depth = 0;  // Omega(0) - Omega(phi_x parked)
  double ej_parked_over_ec = 0;
  double kappa = 0;
  GateTime gate;
  std::vector<std::string> warnings;
};

CalibrationReport calibrate(const CalibrationInputs& in = {});

std::string format_report(const CalibrationReport& report);

}  // namespace qtele::transmon
