#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oracle {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kH = 6.62607015e-34;
constexpr double kHbar = kH / (2.0 * kPi);
constexpr double kElectronVolt = 1.602176634e-19;

double joules_from_ghz(double f) { return kH * f * 1e9; }
double joules_from_micro_ev(double e) { return e * 1e-6 * kElectronVolt; }

double gap_factor(double delta, double f) {
  return std::sqrt(2.0 * joules_from_micro_ev(delta) / joules_from_ghz(f));
}

// Generalized Laguerre L_n^(k)(x) by upward recurrence in n.
double laguerre(int n, int k, double x) {
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = 1.0 + k - x;
  for (int j = 1; j < n; ++j) {
    const double next = ((2.0 * j + 1.0 + k - x) * cur - (j + k) * prev) / (j + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

double cubic(double y, double y0, double a) {
  return ((4.0 * y - 4.0 * y0) * y + 1.0) * y - y0 - a;
}

}  // namespace

std::vector<double> jacobi_eigenvalues(Matrix a, Matrix* vectors) {
  const std::size_t n = a.size();
  Matrix v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        total += a[i][j] * a[i][j];
        if (i != j) off += a[i][j] * a[i][j];
      }
    }
    if (off <= 1e-30 * total || off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p];
          const double vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] < a[y][y]; });
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a[order[i]][order[i]];
  if (vectors) {
    Matrix sorted(n, std::vector<double>(n));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) sorted[r][c] = v[r][order[c]];
    *vectors = std::move(sorted);
  }
  return values;
}

std::vector<double> hermitian_eigenvalues(const std::vector<std::vector<std::complex<double>>>& h) {
  const std::size_t n = h.size();
  Matrix big(2 * n, std::vector<double>(2 * n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      big[i][j] = h[i][j].real();
      big[i + n][j + n] = h[i][j].real();
      big[i][j + n] = -h[i][j].imag();
      big[i + n][j] = h[i][j].imag();
    }
  }
  const std::vector<double> doubled = jacobi_eigenvalues(big);
  std::vector<double> values;
  for (std::size_t i = 0; i < doubled.size(); i += 2) values.push_back(doubled[i]);
  return values;
}

Matrix fock_theta(int dim, double e_c, double e_l) {
  const double length = std::pow(8.0 * e_c / e_l, 0.25);
  Matrix t(dim, std::vector<double>(dim, 0.0));
  for (int k = 0; k + 1 < dim; ++k) {
    t[k][k + 1] = t[k + 1][k] = length * std::sqrt((k + 1) / 2.0);
  }
  return t;
}

Matrix fluxonium_fock_hamiltonian(int dim, double e_c, double e_j, double e_l, double phi_ext) {
  const double omega = std::sqrt(8.0 * e_c * e_l);
  const double length = std::pow(8.0 * e_c / e_l, 0.25);
  const double lambda = length / std::sqrt(2.0);
  const double offset = 2.0 * kPi * phi_ext;
  Matrix h(dim, std::vector<double>(dim, 0.0));
  for (int m = 0; m < dim; ++m) {
    for (int n = 0; n <= m; ++n) {
      const int k = m - n;
      const double log_mag = -0.5 * lambda * lambda +
                             0.5 * (std::lgamma(n + 1.0) - std::lgamma(m + 1.0)) +
                             (k > 0 ? k * std::log(lambda) : 0.0);
      // Re(e^{i offset} i^k) times the real displacement amplitude.
      const double cos_element =
          std::cos(offset + k * kPi / 2.0) * std::exp(log_mag) * laguerre(n, k, lambda * lambda);
      h[m][n] = h[n][m] = -e_j * cos_element;
    }
    h[m][m] += omega * (m + 0.5);
  }
  return h;
}

std::vector<double> fluxonium_energies(int dim, double e_c, double e_j, double e_l, double phi_ext,
                                       int levels) {
  std::vector<double> all = jacobi_eigenvalues(fluxonium_fock_hamiltonian(dim, e_c, e_j, e_l, phi_ext));
  all.resize(levels);
  return all;
}

double fluxonium_phi01_squared(int dim, double e_c, double e_j, double e_l, double phi_ext) {
  Matrix vectors;
  jacobi_eigenvalues(fluxonium_fock_hamiltonian(dim, e_c, e_j, e_l, phi_ext), &vectors);
  const Matrix theta = fock_theta(dim, e_c, e_l);
  double element = 0.0;
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) element += vectors[r][0] * theta[r][c] * vectors[c][1];
  return element * element;
}

std::vector<double> cubic_roots(double y0, double a) {
  const double bound = 1.0 + std::max({std::abs(y0), 0.25, std::abs(y0 + a) / 4.0});
  std::vector<double> edges{-bound};
  const double disc = 64.0 * y0 * y0 - 48.0;
  if (disc > 0.0) {
    edges.push_back((8.0 * y0 - std::sqrt(disc)) / 24.0);
    edges.push_back((8.0 * y0 + std::sqrt(disc)) / 24.0);
  }
  edges.push_back(bound);
  std::vector<double> roots;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    double lo = edges[i];
    double hi = edges[i + 1];
    double flo = cubic(lo, y0, a);
    const double fhi = cubic(hi, y0, a);
    if (flo == 0.0) {
      if (roots.empty() || roots.back() != lo) roots.push_back(lo);
      continue;
    }
    if ((flo > 0.0) == (fhi > 0.0)) continue;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      const double fm = cubic(mid, y0, a);
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    roots.push_back(0.5 * (lo + hi));
  }
  return roots;
}

std::optional<std::pair<double, double>> fold_points(double a) {
  auto three = [a](double y0) { return cubic_roots(y0, a).size() == 3; };
  const double lo = -2.0;
  const double hi = 2.0 + 2.0 * a;
  const int samples = 40001;
  std::optional<double> first;
  std::optional<double> last;
  for (int i = 0; i < samples; ++i) {
    const double y0 = lo + (hi - lo) * i / (samples - 1);
    if (three(y0)) {
      if (!first) first = y0;
      last = y0;
    }
  }
  if (!first) return std::nullopt;
  const double step = (hi - lo) / (samples - 1);
  auto refine = [&](double inside, double outside) {
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (inside + outside);
      (three(mid) ? inside : outside) = mid;
    }
    return 0.5 * (inside + outside);
  };
  return std::make_pair(refine(*first, *first - step), refine(*last, *last + step));
}

double rate_junction_qp(double me_sq, double e_j, double x_qp, double delta, double f01) {
  const double spectral = x_qp * 8.0 * joules_from_ghz(e_j) / (kPi * kHbar) * gap_factor(delta, f01);
  return me_sq * spectral * 1e-6;
}

double rate_array_qp(double me_sq, double e_l, double x_qp, double delta, double f01) {
  const double spectral = x_qp * 2.0 * joules_from_ghz(e_l) / (kPi * kHbar) * gap_factor(delta, f01);
  return me_sq * spectral * 1e-6;
}

double rate_inductive(double me_sq, double e_l, double q_ind) {
  return me_sq * 2.0 * joules_from_ghz(e_l) / (kHbar * q_ind) * 1e-6;
}

double rate_dielectric(double me_sq, double e_c, double q_cap, double f01) {
  const double omega = 2.0 * kPi * f01 * 1e9;
  return me_sq * kHbar * omega * omega / (4.0 * joules_from_ghz(e_c) * q_cap) * 1e-6;
}

double inverse_q_qp(double alpha, double x_qp, double delta, double f) {
  return alpha / kPi * gap_factor(delta, f) * x_qp;
}

double photon_number(double q_tot, double q_ext, double p_in, double f0) {
  const double omega = 2.0 * kPi * f0 * 1e9;
  return 2.0 / (kHbar * omega * omega) * q_tot * q_tot / q_ext * p_in;
}

double q_int_power(double q0, double beta, double gamma, double n) {
  const double gn = gamma * n;
  const double denominator = 1.0 + gn / (1.0 + 0.5 * (std::sqrt(1.0 + 4.0 * gn) - 1.0));
  return 1.0 / (1.0 / q0 + beta * (1.0 / denominator - 1.0));
}

}  // namespace oracle
