#pragma once

#include <complex>
#include <optional>

#include <Eigen/Dense>

namespace fluxqp {

using cplx = std::complex<double>;

enum class BasisKind { harmonic_oscillator, discretized_phase };

/// Representation used for the single-node phase variable.
///
/// The harmonic basis is the Fock basis of the LC oscillator formed by
/// E_C and E_L, with oscillator length (8 E_C / E_L)^(1/4) in units of phase.
/// The discretized basis is a uniform grid on [-grid_extent, +grid_extent]
/// measured relative to the external-flux offset.
class PhaseBasis {
 public:
  static PhaseBasis harmonic(int dimension);
  static PhaseBasis harmonic(int dimension, double oscillator_length);
  static PhaseBasis discretized(int dimension, double grid_extent);

  BasisKind kind() const { return kind_; }
  int dimension() const { return dimension_; }
  /// Half-width of the phase grid. Only meaningful for discretized bases.
  std::optional<double> grid_extent() const { return grid_extent_; }
  /// Set once the basis has been bound to circuit energies.
  std::optional<double> oscillator_length() const { return oscillator_length_; }

  /// Grid spacing of a discretized basis.
  double grid_step() const;

  bool operator==(const PhaseBasis&) const = default;

 private:
  PhaseBasis(BasisKind kind, int dimension, std::optional<double> extent,
             std::optional<double> length);

  BasisKind kind_;
  int dimension_;
  std::optional<double> grid_extent_;
  std::optional<double> oscillator_length_;
};

/// Dense operator expressed in a PhaseBasis (or in a product basis, where
/// the PhaseBasis records the qubit factor).
class OperatorMatrix {
 public:
  /// Throws ContractViolation if `hermitian` is set but the entries are not.
  OperatorMatrix(PhaseBasis basis, Eigen::MatrixXcd entries, bool hermitian);

  const PhaseBasis& basis() const { return basis_; }
  const Eigen::MatrixXcd& entries() const { return entries_; }
  bool hermitian() const { return hermitian_; }
  Eigen::Index dimension() const { return entries_.rows(); }

  /// max |M - M^dagger| / max |M| (0 for the zero matrix).
  static double hermiticity_defect(const Eigen::MatrixXcd& m);

 private:
  PhaseBasis basis_;
  Eigen::MatrixXcd entries_;
  bool hermitian_;
};

/// Lowest eigenpairs of a Hermitian operator, energies ascending.
class EigenSolution {
 public:
  EigenSolution(PhaseBasis basis, Eigen::VectorXd energies, Eigen::MatrixXcd states);

  const PhaseBasis& basis() const { return basis_; }
  const Eigen::VectorXd& energies() const { return energies_; }
  /// Column k is the eigenvector for energies()[k].
  const Eigen::MatrixXcd& states() const { return states_; }
  int levels() const { return static_cast<int>(energies_.size()); }

  /// E_j - E_i.
  double transition(int i, int j) const;

 private:
  PhaseBasis basis_;
  Eigen::VectorXd energies_;
  Eigen::MatrixXcd states_;
};

/// Operators of a single fluxonium-type circuit node.
struct CircuitOperators {
  OperatorMatrix hamiltonian;
  OperatorMatrix phi;
  OperatorMatrix n;
  OperatorMatrix sin_half_phi;
};

/// Builds H = 4 E_C n^2 - E_J cos(phi) + E_L/2 (phi - 2 pi phi_ext)^2 together
/// with phi, n and sin(phi/2). Energies are in GHz, phi_ext in flux quanta.
///
/// Both bases work in the shifted variable theta = phi - 2 pi phi_ext, so the
/// inductive term is centred at the origin; the returned `phi` is theta plus
/// the offset. In the harmonic basis the functions of phase are evaluated via
/// the eigendecomposition of the truncated theta matrix. In the grid basis
/// they are pointwise and derivatives use a 17-point central stencil.
///
/// E_C and E_L must be positive; E_J may be zero (harmonic limit).
CircuitOperators build_operators(const PhaseBasis& basis, double e_c, double e_j, double e_l,
                                 double phi_ext);

/// Lowest `levels` eigenpairs of a Hermitian matrix.
///
/// Real banded input (the grid Hamiltonian) goes through a LAPACK band
/// solver; other real input through a real symmetric solver; complex input
/// through a complex Hermitian solver. Eigenvectors are normalized and phased
/// so that their largest component is real and positive. Exactly degenerate
/// levels are ordered by the index of their dominant basis component.
EigenSolution diagonalize(const OperatorMatrix& h, int levels);

/// <i| op |j> for retained eigenstates i and j.
cplx matrix_element(const OperatorMatrix& op, const EigenSolution& sol, int i, int j);

/// op expressed in the retained eigenbasis: M_ij = <i|op|j>.
Eigen::MatrixXcd in_eigenbasis(const OperatorMatrix& op, const EigenSolution& sol);

}  // namespace fluxqp
