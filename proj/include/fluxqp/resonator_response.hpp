#pragma once

#include <complex>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace fluxqp {

using cplx = std::complex<double>;

/// Onset of the multivalued (bifurcated) Duffing response, 4 sqrt(3) / 9.
inline constexpr double kCriticalNonlinearity = 0.769800358919501;

enum class SweepDirection { up, down };

/// Hanger resonance at one drive power.
///
/// The asymmetry is stored as x_a = delta_f / f0; `delta_f()` gives the
/// absolute-frequency form. `a` is the Duffing nonlinearity at the reference
/// drive (drive = 1 in s21_model).
struct ResonanceParams {
  double f0 = 0.0;     // GHz, low-power resonance
  double q_int = 0.0;
  double q_ext = 0.0;
  double x_a = 0.0;
  double a = 0.0;

  static ResonanceParams with_delta_f(double f0, double q_int, double q_ext, double delta_f,
                                      double a = 0.0);

  double q_tot() const { return 1.0 / (1.0 / q_int + 1.0 / q_ext); }
  double delta_f() const { return x_a * f0; }
  bool bifurcated() const { return a >= kCriticalNonlinearity; }
  void validate() const;
};

/// (g0 + g1 x + g2 x^2) exp(i (p0 + p1 x)) with x = (f - f_m) / f_m.
struct Baseline {
  double g0 = 1.0;
  double g1 = 0.0;
  double g2 = 0.0;
  double p0 = 0.0;
  double p1 = 0.0;
  double f_m = 1.0;  // GHz

  static Baseline unit(double reference_frequency);
  cplx operator()(double f) const;
  void validate() const;
};

/// Line attenuation sampled at three or more frequencies; values are
/// interpolated with the quadratic through the three nodes nearest to the
/// query frequency.
class AttenuationTable {
 public:
  AttenuationTable() = default;
  AttenuationTable(std::vector<double> frequencies_ghz, std::vector<double> attenuation_db);

  bool empty() const { return frequencies_.empty(); }
  double at(double f_ghz) const;
  const std::vector<double>& frequencies() const { return frequencies_; }
  const std::vector<double>& attenuation_db() const { return attenuation_; }

 private:
  std::vector<double> frequencies_;
  std::vector<double> attenuation_;
};

struct SweepTrace {
  std::vector<double> frequencies;  // GHz, strictly increasing
  std::vector<cplx> s21;            // linear
  std::optional<double> drive_power_dbm;
  AttenuationTable attenuation;
  SweepDirection direction = SweepDirection::up;

  /// Throws ValidationError naming the offending row.
  void validate() const;
};

/// Real roots y of 4y^3 - 4 y0 y^2 + y - y0 - a = 0, ascending. Three roots
/// are returned whenever the cubic has three real roots counted with
/// multiplicity.
std::vector<double> solve_detuning(double y0, double a);

/// Discriminant of the monic form of the detuning cubic; positive means
/// three distinct real roots.
double detuning_discriminant(double y0, double a);

/// Applied-detuning interval [lo, hi] (in units of y0) where three roots
/// exist, or nullopt when a <= a_crit.
std::optional<std::pair<double, double>> bistable_window(double a);

/// Root followed by an adiabatic sweep: smallest root for an up-sweep,
/// largest for a down-sweep.
double branch_detuning(double y0, double a, SweepDirection direction);

/// Complex transmission at frequency f. `drive` scales the nonlinearity
/// linearly (a_eff = a * drive).
cplx s21_model(const ResonanceParams& params, const Baseline& baseline, double f,
               double drive = 1.0, SweepDirection direction = SweepDirection::up);

std::vector<cplx> s21_model(const ResonanceParams& params, const Baseline& baseline,
                            std::span<const double> frequencies, double drive = 1.0,
                            SweepDirection direction = SweepDirection::up);

/// Mean photon number 2 Q_tot^2 P_in / (Q_ext hbar omega0^2); p_in in watts,
/// f0 in GHz.
///
/// With P_in derived from room-temperature line attenuation this is a lower
/// estimate, since the attenuation drops on cooldown.
double photon_number(const ResonanceParams& params, double p_in_watts, double f0_ghz);

/// Power at the resonator input in watts for an instrument output level in
/// dBm and a line attenuation in dB (positive number).
double power_at_resonator(double output_dbm, double attenuation_db);

/// Scales the off-resonant median magnitude to 1 and removes a linear phase
/// (offset plus cable delay) fitted on the wings. The wings are the first and
/// last tenth of the samples. Needs at least 20 points.
SweepTrace normalize_trace(const SweepTrace& trace);

/// Gain and phase removed by normalize_trace: normalized = raw / (gain * exp(i (c0 + c1 f))).
struct NormalizationFactors {
  double gain = 1.0;
  double phase_offset = 0.0;  // rad
  double phase_slope = 0.0;   // rad / GHz
};
NormalizationFactors normalization_factors(const SweepTrace& trace);

}  // namespace fluxqp
