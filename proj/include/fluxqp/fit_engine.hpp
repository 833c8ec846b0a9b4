#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fluxqp/circuit_models.hpp"
#include "fluxqp/loss_channels.hpp"
#include "fluxqp/resonator_response.hpp"

namespace fluxqp {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Bounded nonlinear least-squares problem. Complex residuals are expected to
/// be stacked as real and imaginary parts by the caller.
struct FitProblem {
  ResidualFn residual;
  JacobianFn jacobian;  // optional; forward differences otherwise
  Eigen::VectorXd initial_guess;
  Eigen::VectorXd lower;  // may be -inf
  Eigen::VectorXd upper;  // may be +inf
  Eigen::VectorXd scale;  // characteristic magnitudes, > 0
  std::vector<std::string> names;

  /// Unbounded problem with unit scales.
  static FitProblem unbounded(ResidualFn residual, Eigen::VectorXd guess);
  void validate() const;
};

struct LeastSquaresOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-10;
  double step_tolerance = 1e-12;      // in units of `scale`
  double finite_difference_step = 1e-7;  // in units of `scale`
  double initial_damping = 1e-3;
};

struct FitResult {
  Eigen::VectorXd parameters;
  /// Gauss-Newton covariance s^2 (J^T J)^-1 with s^2 = RSS / (m - n);
  /// empty when the normal matrix is singular.
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;  // Euclidean norm of the residual vector
  bool converged = false;
  int iterations = 0;          // accepted steps
  int evaluations = 0;
  std::vector<std::string> diagnostics;

  bool covariance_available() const { return covariance.size() > 0; }
  /// Square roots of the covariance diagonal; empty when unavailable.
  Eigen::VectorXd uncertainties() const;
};

/// Damped Gauss-Newton with a Marquardt trust strategy.
///
/// Damping shrinks after an accepted step and grows after a rejected one.
/// Iteration stops when an accepted step changes the residual norm by less
/// than `relative_tolerance`, when the scaled step falls below
/// `step_tolerance`, or after `max_iterations`. A NaN residual aborts the fit
/// with FitError.
FitResult least_squares(const FitProblem& problem, const LeastSquaresOptions& options = {});

/// Jacobian by forward differences with steps `step * scale`, stepping
/// backwards where the forward point would leave the bounds.
Eigen::MatrixXd finite_difference_jacobian(const FitProblem& problem, const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& r0, double step);

// --- S21 traces -----------------------------------------------------------

struct S21Fit {
  ResonanceParams params;
  /// Baseline relative to the input (raw) trace.
  Baseline baseline;
  FitResult result;
  bool bifurcation_detected = false;
  /// Sample range [first, last) that entered the fit.
  std::size_t first_sample = 0;
  std::size_t last_sample = 0;
};

struct S21FitOptions {
  bool allow_nonlinear = false;
  /// Ratio between a jump and its neighbourhood that flags a discontinuity.
  double jump_ratio = 10.0;
};

/// Index k such that the step s[k] -> s[k+1] is a discontinuity, if any.
std::optional<std::size_t> find_discontinuity(const std::vector<cplx>& s21, double ratio = 10.0);

/// Fits the nonlinear hanger model times a baseline to a trace.
///
/// The trace is normalized first; the initial resonance guess uses the point
/// of maximal |dS21/df|, the half-power width of |1 - S21| and the dip depth.
/// Traces whose dip is below three times the off-resonant noise raise
/// FitError("no resonance feature detected"). A detected discontinuity
/// raises FitError unless nonlinear fitting is enabled, in which case only
/// the continuous segment before the jump is fitted.
S21Fit fit_s21(const SweepTrace& trace, const S21FitOptions& options = {});

// --- Power sweeps ---------------------------------------------------------

struct PowerSweepPoint {
  double mean_n = 0.0;
  double q_int = 0.0;
  double a = 0.0;
};

struct PowerSweepFitInput {
  std::vector<PowerSweepPoint> points;
  double a_crit_fraction = 0.01;
};

struct PowerSweepFit {
  PowerLossSpec spec;
  FitResult result;
  double a_limit = 0.0;         // points with a above this are excluded
  std::size_t points_used = 0;
  double n_min_used = 0.0;
  double n_max_used = 0.0;
  bool gamma_poorly_constrained = false;
};

/// Fits (Q0, beta, gamma) of the photon-number loss model to points with
/// a <= a_crit_fraction * a_crit. Residuals are relative deviations of 1/Q.
PowerSweepFit fit_power_sweep(const PowerSweepFitInput& input);

// --- Two-tone spectra -----------------------------------------------------

enum class ObservationKind { resonator, qubit_transition };

struct SpectrumObservation {
  double flux = 0.0;       // flux quanta
  double frequency = 0.0;  // GHz
  ObservationKind kind = ObservationKind::qubit_transition;
  int from = 0;            // qubit transitions only
  int to = 1;
  int mode = 0;            // resonator observations only
  double sigma = 1e-3;     // GHz
};

struct SpectrumFitOptions {
  int qubit_levels = 8;
  /// Observations farther than this from every candidate branch are dropped.
  double assignment_window = 0.5;  // GHz
  /// Minimum bare-state weight for a dressed state to be a candidate.
  double candidate_weight = 0.2;
  LeastSquaresOptions solver;
};

struct SpectrumFit {
  CoupledSystemSpec spec;
  FitResult result;
  std::vector<std::size_t> excluded;  // unassignable observation indices
  Eigen::VectorXd model_frequencies;  // per observation at the optimum (NaN if excluded)
};

/// Model frequency for an observation: nearest candidate branch of its kind.
/// Returns nullopt when no candidate lies inside `window`.
std::optional<double> assign_observation(const DressedSpectrum& dressed,
                                         const SpectrumObservation& obs, double min_weight,
                                         double window);

/// Fits E_C, E_J, E_L, and per mode f_res and g (charge coupling only) to
/// labeled spectroscopy points.
SpectrumFit fit_spectrum(const std::vector<SpectrumObservation>& observations,
                         const CoupledSystemSpec& initial, const SpectrumFitOptions& options = {});

// --- Quasiparticle density from the frequency dependence -----------------

struct XqpPoint {
  double f0 = 0.0;  // GHz
  double q_int = 0.0;
};

struct XqpFit {
  double x_qp = 0.0;
  double q0 = 0.0;
  double x_qp_sigma = 0.0;
  double q0_sigma = 0.0;
  FitResult result;
};

/// Linear regression of 1/Q_int on (alpha/pi) sqrt(2 Delta / h f0), weighted
/// by relative deviation. A negative x_qp is returned as is with a warning.
XqpFit fit_xqp_frequency(const std::vector<XqpPoint>& points, double alpha,
                         double delta = kWsiGapMicroEv);

}  // namespace fluxqp
