#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cohortsurv/matrix.hpp"

namespace cohortsurv {

// Standard normal CDF. Clamps to 0/1 for |x| > 8. Throws std::domain_error
// on non-finite input.
double std_normal_cdf(double x);

// Inverse of std_normal_cdf for p in (0, 1).
double std_normal_quantile(double p);

// Two-sided critical value z* = quantile(1 - (1 - level)/2).
double normal_critical_value(double level);

// Upper tail of the chi-square distribution with one degree of freedom.
// Satisfies chi_square_sf_1df(z*z) == 2 * (1 - std_normal_cdf(|z|)).
double chi_square_sf_1df(double x);

// Upper tail for an integer number of degrees of freedom (closed-form
// recursion from the 1 and 2 df cases).
double chi_square_sf(double x, int df);

// Cholesky factor of a symmetric positive-definite matrix. Construction fails
// with NotPositiveDefinite when the factorization breaks down, so an existing
// SpdMatrix is always solvable.
class SpdMatrix {
 public:
  explicit SpdMatrix(const Matrix& a);

  std::size_t size() const noexcept { return lower_.rows(); }
  std::vector<double> solve(std::span<const double> b) const;
  Matrix solve(const Matrix& b) const;
  Matrix inverse() const;

 private:
  Matrix lower_;
};

std::vector<double> solve_spd(const Matrix& a, std::span<const double> b);
Matrix solve_spd(const Matrix& a, const Matrix& b);

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> x,
                                     double h = 1e-5);

double max_abs(std::span<const double> v);

}  // namespace cohortsurv
