#include "cohortsurv/statfn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cohortsurv/error.hpp"

namespace cohortsurv {

double std_normal_cdf(double x) {
  if (!std::isfinite(x)) throw std::domain_error("std_normal_cdf: non-finite argument");
  if (x > 8.0) return 1.0;
  if (x < -8.0) return 0.0;
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("std_normal_quantile: p outside (0, 1)");

  // Acklam's rational approximation, then one Halley step against erfc.
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double low = 0.02425;

  double x;
  if (p < low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double normal_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::domain_error("confidence level must lie in (0, 1)");
  return std_normal_quantile(1.0 - 0.5 * (1.0 - level));
}

double chi_square_sf_1df(double x) {
  if (std::isnan(x) || x < 0.0) throw std::domain_error("chi_square_sf_1df: negative argument");
  if (std::isinf(x)) return 0.0;
  return 2.0 * std_normal_cdf(-std::sqrt(x));
}

double chi_square_sf(double x, int df) {
  if (df < 1) throw std::domain_error("chi_square_sf: df must be positive");
  if (std::isnan(x) || x < 0.0) throw std::domain_error("chi_square_sf: negative argument");
  if (std::isinf(x)) return 0.0;
  if (x == 0.0) return 1.0;

  // Q(x; k + 2) = Q(x; k) + (x/2)^(k/2) e^(-x/2) / Gamma(k/2 + 1)
  const double half = 0.5 * x;
  int k = (df % 2 == 1) ? 1 : 2;
  double q = (k == 1) ? chi_square_sf_1df(x) : std::exp(-half);
  for (; k < df; k += 2) {
    const double kk = 0.5 * k;
    q += std::exp(kk * std::log(half) - half - std::lgamma(kk + 1.0));
  }
  return std::clamp(q, 0.0, 1.0);
}

SpdMatrix::SpdMatrix(const Matrix& a) : lower_(a.rows(), a.cols()) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw NotPositiveDefinite("matrix is not square");

  double scale = 0.0;
  for (double v : a.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-12 * std::max(1.0, scale))
        throw NotPositiveDefinite("matrix is not symmetric");

  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= lower_(j, k) * lower_(j, k);
    // Pivots below this relative size are numerically singular.
    if (!(diag > 1e-13 * std::max(1.0, scale)))
      throw NotPositiveDefinite(
          "matrix is not positive definite (pivot " + std::to_string(j) + ")", j);
    const double ljj = std::sqrt(diag);
    lower_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= lower_(i, k) * lower_(j, k);
      lower_(i, j) = s / ljj;
    }
  }
}

std::vector<double> SpdMatrix::solve(std::span<const double> b) const {
  const std::size_t n = size();
  if (b.size() != n) throw std::invalid_argument("solve: dimension mismatch");
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= lower_(i, k) * y[k];
    y[i] /= lower_(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) y[i] -= lower_(k, i) * y[k];
    y[i] /= lower_(i, i);
  }
  return y;
}

Matrix SpdMatrix::solve(const Matrix& b) const {
  if (b.rows() != size()) throw std::invalid_argument("solve: dimension mismatch");
  Matrix x(b.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    const auto col = solve(b.column(j));
    for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = col[i];
  }
  return x;
}

Matrix SpdMatrix::inverse() const {
  Matrix inv = solve(Matrix::identity(size()));
  // Symmetrize so callers can rely on exact symmetry.
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double m = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = m;
      inv(j, i) = m;
    }
  return inv;
}

std::vector<double> solve_spd(const Matrix& a, std::span<const double> b) {
  return SpdMatrix(a).solve(b);
}

Matrix solve_spd(const Matrix& a, const Matrix& b) { return SpdMatrix(a).solve(b); }

std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> x,
                                     double h) {
  if (!(h > 0.0)) throw std::domain_error("finite_diff_grad: step must be positive");
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h;
    const double up = f(point);
    point[i] = saved - h;
    const double down = f(point);
    point[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw std::domain_error("finite_diff_grad: non-finite function value");
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace cohortsurv
