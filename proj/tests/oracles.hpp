#pragma once

// Reference implementations used only by the tests. They share no code with
// the library and favour transparency over speed.

#include <complex>
#include <optional>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, ascending.
/// If `vectors` is given it receives the eigenvectors as columns.
std::vector<double> jacobi_eigenvalues(Matrix a, Matrix* vectors = nullptr);

/// Eigenvalues of a Hermitian matrix through its real 2n x 2n embedding; each
/// value of the embedding appears twice and is reported once.
std::vector<double> hermitian_eigenvalues(const std::vector<std::vector<std::complex<double>>>& h);

/// Fluxonium Hamiltonian in the Fock basis of the LC oscillator with the
/// cosine built from closed-form displacement matrix elements.
Matrix fluxonium_fock_hamiltonian(int dim, double e_c, double e_j, double e_l, double phi_ext);
/// theta = phi - 2 pi phi_ext in the same basis.
Matrix fock_theta(int dim, double e_c, double e_l);

/// Lowest `levels` fluxonium energies (absolute, GHz).
std::vector<double> fluxonium_energies(int dim, double e_c, double e_j, double e_l, double phi_ext,
                                       int levels);

/// |<0|phi|1>|^2 of the fluxonium in the Fock-basis construction.
double fluxonium_phi01_squared(int dim, double e_c, double e_j, double e_l, double phi_ext);

/// Real roots of 4y^3 - 4 y0 y^2 + y - y0 - a by bracketing and bisection.
std::vector<double> cubic_roots(double y0, double a);

/// Interval of y0 with three real roots, located by scanning the root count.
std::optional<std::pair<double, double>> fold_points(double a);

// SI-unit rate formulas; energies and frequencies in GHz, gap in micro-eV,
// rates returned in 1/us.
double rate_junction_qp(double me_sq, double e_j, double x_qp, double delta, double f01);
double rate_array_qp(double me_sq, double e_l, double x_qp, double delta, double f01);
double rate_inductive(double me_sq, double e_l, double q_ind);
double rate_dielectric(double me_sq, double e_c, double q_cap, double f01);
double inverse_q_qp(double alpha, double x_qp, double delta, double f);

/// Mean photon number in SI units; power in W, frequency in GHz.
double photon_number(double q_tot, double q_ext, double p_in, double f0);

/// Power-dependent internal Q evaluated term by term.
double q_int_power(double q0, double beta, double gamma, double n);

}  // namespace oracle
