#include <cmath>
#include <limits>
#include <sstream>

#include "fluxqp/errors.hpp"
#include "fluxqp/fit_engine.hpp"

namespace fluxqp {

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

Eigen::VectorXd clamp_to_bounds(const FitProblem& p, Eigen::VectorXd x) {
  return x.cwiseMax(p.lower).cwiseMin(p.upper);
}

Eigen::VectorXd evaluate(const FitProblem& p, const Eigen::VectorXd& x, int& evaluations) {
  Eigen::VectorXd r = p.residual(x);
  ++evaluations;
  if (!all_finite(r)) {
    std::ostringstream msg;
    msg << "fit aborted: residual is not finite at parameters [" << x.transpose() << "]";
    throw FitError(msg.str());
  }
  return r;
}

}  // namespace

FitProblem FitProblem::unbounded(ResidualFn residual, Eigen::VectorXd guess) {
  FitProblem p;
  p.residual = std::move(residual);
  const auto n = guess.size();
  p.initial_guess = std::move(guess);
  p.lower = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  p.upper = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  p.scale = Eigen::VectorXd::Ones(n);
  return p;
}

void FitProblem::validate() const {
  const auto n = initial_guess.size();
  if (n == 0) throw FitError("fit problem has no parameters");
  if (lower.size() != n || upper.size() != n || scale.size() != n) {
    throw FitError("bounds and scales must match the parameter count");
  }
  if (!residual) throw FitError("fit problem has no residual function");
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(scale[k] > 0.0)) throw FitError("parameter scales must be positive");
    if (!(initial_guess[k] >= lower[k] && initial_guess[k] <= upper[k])) {
      throw FitError("initial guess lies outside the bounds");
    }
  }
}

Eigen::VectorXd FitResult::uncertainties() const {
  if (!covariance_available()) return {};
  return covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

Eigen::MatrixXd finite_difference_jacobian(const FitProblem& problem, const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& r0, double step) {
  Eigen::MatrixXd jac(r0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    double h = step * problem.scale[k];
    if (x[k] + h > problem.upper[k]) h = -h;
    Eigen::VectorXd shifted = x;
    shifted[k] += h;
    const Eigen::VectorXd r = problem.residual(shifted);
    if (!r.allFinite()) throw FitError("fit aborted: non-finite residual while differencing");
    jac.col(k) = (r - r0) / h;
  }
  return jac;
}

FitResult least_squares(const FitProblem& problem, const LeastSquaresOptions& options) {
  problem.validate();
  const Eigen::Index n = problem.initial_guess.size();
  FitResult out;
  Eigen::VectorXd x = clamp_to_bounds(problem, problem.initial_guess);
  Eigen::VectorXd r = evaluate(problem, x, out.evaluations);
  if (r.size() < n) {
    throw FitError("residual dimension is smaller than the number of parameters");
  }
  const Eigen::VectorXd& scale = problem.scale;

  const auto jacobian_at = [&](const Eigen::VectorXd& point, const Eigen::VectorXd& res) {
    if (problem.jacobian) return Eigen::MatrixXd(problem.jacobian(point));
    out.evaluations += static_cast<int>(n);
    return finite_difference_jacobian(problem, point, res, options.finite_difference_step);
  };

  double norm = r.norm();
  double damping = options.initial_damping;
  bool done = norm == 0.0;
  out.converged = done;
  int attempts = 0;
  while (!done && out.iterations < options.max_iterations) {
    const Eigen::MatrixXd jac = jacobian_at(x, r) * scale.asDiagonal();
    const Eigen::MatrixXd normal = jac.transpose() * jac;
    const Eigen::VectorXd gradient = jac.transpose() * r;
    const double diag_floor = std::max(normal.diagonal().maxCoeff() * 1e-12, 1e-300);
    const Eigen::VectorXd diag = normal.diagonal().cwiseMax(diag_floor);

    bool accepted = false;
    while (!accepted) {
      if (++attempts > 20 * options.max_iterations) {
        done = true;
        break;
      }
      Eigen::MatrixXd system = normal;
      system.diagonal() += damping * diag;
      const Eigen::VectorXd delta = system.ldlt().solve(-gradient);
      const Eigen::VectorXd trial = clamp_to_bounds(problem, x + scale.cwiseProduct(delta));
      const double step = ((trial - x).array() / scale.array()).matrix().norm();
      if (step < options.step_tolerance) {
        out.converged = true;
        done = true;
        break;
      }
      const Eigen::VectorXd r_trial = evaluate(problem, trial, out.evaluations);
      const double trial_norm = r_trial.norm();
      if (trial_norm < norm) {
        const double change = (norm - trial_norm) / norm;
        x = trial;
        r = r_trial;
        norm = trial_norm;
        damping = std::max(damping / 3.0, 1e-15);
        ++out.iterations;
        accepted = true;
        if (change < options.relative_tolerance || norm == 0.0) {
          out.converged = true;
          done = true;
        }
      } else {
        damping *= 4.0;
        if (damping > 1e16) {
          // No descent direction left at working precision.
          out.converged = true;
          done = true;
          break;
        }
      }
    }
  }
  if (!out.converged) {
    out.diagnostics.push_back("iteration limit reached before convergence");
  }

  out.parameters = x;
  out.residual_norm = norm;
  const Eigen::MatrixXd jac = jacobian_at(x, r) * scale.asDiagonal();
  const Eigen::MatrixXd normal = jac.transpose() * jac;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal);
  const double largest = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (largest > 0.0 && eig.eigenvalues().minCoeff() > 1e-14 * largest) {
    const auto m = r.size();
    const double variance = m > n ? norm * norm / static_cast<double>(m - n) : 1.0;
    const Eigen::MatrixXd inv = eig.eigenvectors() *
                                eig.eigenvalues().cwiseInverse().asDiagonal() *
                                eig.eigenvectors().transpose();
    out.covariance = variance * scale.asDiagonal() * inv * scale.asDiagonal();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  } else {
    out.diagnostics.push_back("normal equations singular at optimum; covariance unavailable");
  }
  return out;
}

}  // namespace fluxqp
