#include "fluxqp/quantum_core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include <lapacke.h>

#include "fluxqp/errors.hpp"

namespace fluxqp {

namespace {

// Eigensystem of the dimensionless position (a + a^dagger) / sqrt(2) in a
// truncated Fock space; it depends on the dimension only and is shared.
struct PositionEigensystem {
  Eigen::VectorXd nodes;
  Eigen::MatrixXd vectors;
};

std::shared_ptr<const PositionEigensystem> position_eigensystem(int dim) {
  static std::mutex guard;
  static std::map<int, std::shared_ptr<const PositionEigensystem>> cache;
  std::lock_guard lock(guard);
  auto& slot = cache[dim];
  if (!slot) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd sub(dim - 1);
    for (int k = 1; k < dim; ++k) sub[k - 1] = std::sqrt(0.5 * k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    slot = std::make_shared<const PositionEigensystem>(
        PositionEigensystem{eig.eigenvalues(), eig.eigenvectors()});
  }
  return slot;
}

constexpr int kStencilHalfWidth = 8;
constexpr double kHermitianTolerance = 1e-12;

// Central finite-difference weights of order 2p for the first and second
// derivative; index k holds the weight of f_{j+k} (f_{j-k} gets the mirrored
// sign for the first derivative, the same value for the second).
struct Stencil {
  std::vector<double> first;
  std::vector<double> second;
};

Stencil central_stencil(int p) {
  Stencil s;
  s.first.assign(p + 1, 0.0);
  s.second.assign(p + 1, 0.0);
  const double pf = std::tgamma(p + 1.0);
  for (int k = 1; k <= p; ++k) {
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    const double ratio = pf * pf / (std::tgamma(p - k + 1.0) * std::tgamma(p + k + 1.0));
    s.first[k] = sign * ratio / k;
    s.second[k] = 2.0 * sign * ratio / (k * k);
    s.second[0] -= 2.0 * s.second[k];
  }
  return s;
}

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ParameterDomainError(std::string(name) + " must be positive and finite, got " +
                               std::to_string(value));
  }
}

Eigen::Index bandwidth(const Eigen::MatrixXd& m) {
  Eigen::Index kd = 0;
  const Eigen::Index n = m.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = n - 1; i > j + kd; --i) {
      if (m(i, j) != 0.0) {
        kd = i - j;
        break;
      }
    }
  }
  return kd;
}

struct RealEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

// Eigenvalues from the band reduction, eigenvectors by inverse iteration
// with a banded LU factorization, so the cost stays O(n kd^2) per level.
RealEigen banded_lowest(const Eigen::MatrixXd& m, Eigen::Index kd, int levels) {
  const lapack_int n = static_cast<lapack_int>(m.rows());
  const lapack_int k = static_cast<lapack_int>(kd);
  const lapack_int ldab = k + 1;
  std::vector<double> ab(static_cast<std::size_t>(ldab) * n, 0.0);
  for (lapack_int j = 0; j < n; ++j) {
    for (lapack_int i = j; i < std::min<lapack_int>(n, j + ldab); ++i) {
      ab[static_cast<std::size_t>(j) * ldab + (i - j)] = m(i, j);
    }
  }
  std::vector<double> w(n);
  std::vector<lapack_int> ifail(n);
  lapack_int found = 0;
  const double abstol = 2.0 * LAPACKE_dlamch('S');
  lapack_int info = LAPACKE_dsbevx(LAPACK_COL_MAJOR, 'N', 'I', 'L', n, k, ab.data(), ldab,
                                   nullptr, n, 0.0, 0.0, 1, levels, abstol, &found, w.data(),
                                   nullptr, n, ifail.data());
  if (info != 0 || found != levels) {
    throw DiagnosticsError("banded eigensolver failed (info=" + std::to_string(info) + ")");
  }

  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  const lapack_int ldgb = 3 * k + 1;
  std::vector<double> lu(static_cast<std::size_t>(ldgb) * n);
  std::vector<lapack_int> pivots(n);
  RealEigen out;
  out.values = Eigen::Map<Eigen::VectorXd>(w.data(), levels);
  out.vectors = Eigen::MatrixXd::Zero(n, levels);
  for (int level = 0; level < levels; ++level) {
    const double shift = w[level] - 1e-13 * norm;
    std::fill(lu.begin(), lu.end(), 0.0);
    for (lapack_int j = 0; j < n; ++j) {
      const lapack_int lo = std::max<lapack_int>(0, j - k);
      const lapack_int hi = std::min<lapack_int>(n - 1, j + k);
      for (lapack_int i = lo; i <= hi; ++i) {
        lu[static_cast<std::size_t>(j) * ldgb + (2 * k + i - j)] = m(i, j) - (i == j ? shift : 0.0);
      }
    }
    info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, k, k, lu.data(), ldgb, pivots.data());
    if (info < 0) throw DiagnosticsError("banded factorization failed");
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    for (int iter = 0; iter < 3; ++iter) {
      info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n, k, k, 1, lu.data(), ldgb, pivots.data(),
                            v.data(), n);
      if (info != 0) throw DiagnosticsError("banded solve failed");
      for (int prev = 0; prev < level; ++prev) {
        if (std::abs(w[prev] - w[level]) < 1e-8 * std::max(1.0, norm)) {
          v -= out.vectors.col(prev).dot(v) * out.vectors.col(prev);
        }
      }
      v.normalize();
    }
    out.vectors.col(level) = v;
  }
  return out;
}

}  // namespace

PhaseBasis::PhaseBasis(BasisKind kind, int dimension, std::optional<double> extent,
                       std::optional<double> length)
    : kind_(kind), dimension_(dimension), grid_extent_(extent), oscillator_length_(length) {
  if (dimension < 2) {
    throw ContractViolation("basis dimension must be at least 2");
  }
}

PhaseBasis PhaseBasis::harmonic(int dimension) {
  return PhaseBasis(BasisKind::harmonic_oscillator, dimension, std::nullopt, std::nullopt);
}

PhaseBasis PhaseBasis::harmonic(int dimension, double oscillator_length) {
  require_positive(oscillator_length, "oscillator length");
  return PhaseBasis(BasisKind::harmonic_oscillator, dimension, std::nullopt, oscillator_length);
}

PhaseBasis PhaseBasis::discretized(int dimension, double grid_extent) {
  require_positive(grid_extent, "grid extent");
  return PhaseBasis(BasisKind::discretized_phase, dimension, grid_extent, std::nullopt);
}

double PhaseBasis::grid_step() const {
  if (kind_ != BasisKind::discretized_phase) {
    throw ContractViolation("grid step requested for a harmonic basis");
  }
  return 2.0 * *grid_extent_ / (dimension_ - 1);
}

OperatorMatrix::OperatorMatrix(PhaseBasis basis, Eigen::MatrixXcd entries, bool hermitian)
    : basis_(std::move(basis)), entries_(std::move(entries)), hermitian_(hermitian) {
  if (entries_.rows() != entries_.cols()) {
    throw ContractViolation("operator matrix must be square");
  }
  if (hermitian_ && hermiticity_defect(entries_) > kHermitianTolerance) {
    throw ContractViolation("operator flagged hermitian is not hermitian");
  }
}

double OperatorMatrix::hermiticity_defect(const Eigen::MatrixXcd& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() / scale;
}

EigenSolution::EigenSolution(PhaseBasis basis, Eigen::VectorXd energies, Eigen::MatrixXcd states)
    : basis_(std::move(basis)), energies_(std::move(energies)), states_(std::move(states)) {
  if (states_.cols() != energies_.size()) {
    throw ContractViolation("eigenvector count does not match eigenvalue count");
  }
}

double EigenSolution::transition(int i, int j) const {
  if (i < 0 || j < 0 || i >= levels() || j >= levels()) {
    throw ContractViolation("level index out of range");
  }
  return energies_[j] - energies_[i];
}

CircuitOperators build_operators(const PhaseBasis& basis, double e_c, double e_j, double e_l,
                                 double phi_ext) {
  require_positive(e_c, "E_C");
  require_positive(e_l, "E_L");
  if (!(e_j >= 0.0) || !std::isfinite(e_j)) {
    throw ParameterDomainError("E_J must be non-negative and finite");
  }
  if (!std::isfinite(phi_ext)) {
    throw ParameterDomainError("external flux must be finite");
  }
  const double offset = 2.0 * std::numbers::pi * phi_ext;
  const int dim = basis.dimension();
  const cplx i_unit(0.0, 1.0);

  if (basis.kind() == BasisKind::harmonic_oscillator) {
    if (dim < 4) {
      throw TruncationError("harmonic basis needs at least 4 levels to represent cos(phi)");
    }
    const double natural = std::pow(8.0 * e_c / e_l, 0.25);
    const double length = basis.oscillator_length().value_or(natural);
    const PhaseBasis bound = PhaseBasis::harmonic(dim, length);

    Eigen::MatrixXd ladder = Eigen::MatrixXd::Zero(dim, dim);  // annihilation operator
    for (int k = 1; k < dim; ++k) ladder(k - 1, k) = std::sqrt(static_cast<double>(k));
    const Eigen::MatrixXd theta = length / std::numbers::sqrt2 * (ladder + ladder.transpose());
    const Eigen::MatrixXd momentum = (ladder.transpose() - ladder) / (std::numbers::sqrt2 * length);

    const auto position = position_eigensystem(dim);
    const Eigen::MatrixXd& vecs = position->vectors;
    const Eigen::ArrayXd nodes = length * position->nodes.array() + offset;
    const Eigen::MatrixXd cos_phi = vecs * nodes.cos().matrix().asDiagonal() * vecs.transpose();
    const Eigen::MatrixXd sin_half =
        vecs * (0.5 * nodes).sin().matrix().asDiagonal() * vecs.transpose();

    Eigen::MatrixXd h = -e_j * cos_phi;
    if (length == natural) {
      // 4 E_C n^2 + E_L theta^2 / 2 is exactly diagonal in its own Fock basis.
      const double omega = std::sqrt(8.0 * e_c * e_l);
      for (int k = 0; k < dim; ++k) h(k, k) += omega * (k + 0.5);
    } else {
      h += 4.0 * e_c * momentum.transpose() * momentum + 0.5 * e_l * theta * theta;
    }
    h = 0.5 * (h + h.transpose()).eval();

    Eigen::MatrixXd phi = theta;
    phi.diagonal().array() += offset;
    return CircuitOperators{
        OperatorMatrix(bound, h.cast<cplx>(), true),
        OperatorMatrix(bound, phi.cast<cplx>(), true),
        OperatorMatrix(bound, i_unit * momentum.cast<cplx>(), true),
        OperatorMatrix(bound, (0.5 * (sin_half + sin_half.transpose())).cast<cplx>(), true)};
  }

  const double step = basis.grid_step();
  const double extent = *basis.grid_extent();
  const Stencil stencil = central_stencil(kStencilHalfWidth);
  Eigen::MatrixXd d1 = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(dim, dim);
  for (int j = 0; j < dim; ++j) {
    d2(j, j) = stencil.second[0];
    for (int k = 1; k <= kStencilHalfWidth; ++k) {
      if (j + k < dim) {
        d1(j, j + k) = stencil.first[k];
        d2(j, j + k) = stencil.second[k];
      }
      if (j - k >= 0) {
        d1(j, j - k) = -stencil.first[k];
        d2(j, j - k) = stencil.second[k];
      }
    }
  }
  d1 /= step;
  d2 /= step * step;

  Eigen::MatrixXd h = -4.0 * e_c * d2;
  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(dim, dim);
  Eigen::MatrixXcd sin_half = Eigen::MatrixXcd::Zero(dim, dim);
  for (int j = 0; j < dim; ++j) {
    const double theta = -extent + j * step;
    h(j, j) += -e_j * std::cos(theta + offset) + 0.5 * e_l * theta * theta;
    phi(j, j) = theta + offset;
    sin_half(j, j) = std::sin(0.5 * (theta + offset));
  }
  return CircuitOperators{OperatorMatrix(basis, h.cast<cplx>(), true),
                          OperatorMatrix(basis, std::move(phi), true),
                          OperatorMatrix(basis, -i_unit * d1.cast<cplx>(), true),
                          OperatorMatrix(basis, std::move(sin_half), true)};
}

EigenSolution diagonalize(const OperatorMatrix& h, int levels) {
  const Eigen::MatrixXcd& m = h.entries();
  const Eigen::Index dim = m.rows();
  if (levels < 1 || levels > dim) {
    throw ContractViolation("requested levels must lie in [1, dimension]");
  }
  if (OperatorMatrix::hermiticity_defect(m) > kHermitianTolerance) {
    throw ContractViolation("diagonalize requires a hermitian matrix");
  }

  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;
  if (m.imag().cwiseAbs().maxCoeff() == 0.0) {
    const Eigen::MatrixXd real = m.real();
    const Eigen::Index kd = bandwidth(real);
    if (dim > 256 && kd * 8 < dim) {
      RealEigen eig = banded_lowest(real, kd, levels);
      values = std::move(eig.values);
      vectors = eig.vectors.cast<cplx>();
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(real);
      if (solver.info() != Eigen::Success) throw DiagnosticsError("eigensolver did not converge");
      values = solver.eigenvalues().head(levels);
      vectors = solver.eigenvectors().leftCols(levels).cast<cplx>();
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
    if (solver.info() != Eigen::Success) throw DiagnosticsError("eigensolver did not converge");
    values = solver.eigenvalues().head(levels);
    vectors = solver.eigenvectors().leftCols(levels);
  }

  std::vector<Eigen::Index> dominant(levels);
  for (int k = 0; k < levels; ++k) {
    auto col = vectors.col(k);
    col.normalize();
    Eigen::Index idx = 0;
    col.cwiseAbs().maxCoeff(&idx);
    dominant[k] = idx;
    const cplx pivot = col(idx);
    col *= std::abs(pivot) / pivot;
  }

  std::vector<int> order(levels);
  std::iota(order.begin(), order.end(), 0);
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (std::abs(values[a] - values[b]) <= 1e-12 * scale) return dominant[a] < dominant[b];
    return values[a] < values[b];
  });
  Eigen::VectorXd sorted_values(levels);
  Eigen::MatrixXcd sorted_vectors(dim, levels);
  for (int k = 0; k < levels; ++k) {
    sorted_values[k] = values[order[k]];
    sorted_vectors.col(k) = vectors.col(order[k]);
  }
  return EigenSolution(h.basis(), std::move(sorted_values), std::move(sorted_vectors));
}

cplx matrix_element(const OperatorMatrix& op, const EigenSolution& sol, int i, int j) {
  if (i < 0 || j < 0 || i >= sol.levels() || j >= sol.levels()) {
    throw ContractViolation("matrix element index out of range");
  }
  if (op.dimension() != sol.states().rows()) {
    throw ContractViolation("operator and eigenstates live in different spaces");
  }
  return sol.states().col(i).dot(op.entries() * sol.states().col(j));
}

Eigen::MatrixXcd in_eigenbasis(const OperatorMatrix& op, const EigenSolution& sol) {
  if (op.dimension() != sol.states().rows()) {
    throw ContractViolation("operator and eigenstates live in different spaces");
  }
  return sol.states().adjoint() * op.entries() * sol.states();
}

}  // namespace fluxqp
