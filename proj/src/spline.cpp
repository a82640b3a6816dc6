#include "memdeeg/spline.hpp"

#include <algorithm>

#include "memdeeg/error.hpp"

namespace memdeeg {

NaturalCubicSpline::NaturalCubicSpline(std::span<const double> knots, const Matrix& values)
    : knots_(knots.begin(), knots.end()), values_(values), second_(values.rows(), knots.size(), 0.0) {
  const std::size_t k = knots_.size();
  if (k < 2 || values.cols() != k) throw Error(ErrorCode::InvalidArgument, "spline needs >= 2 knots per row");
  for (std::size_t i = 1; i < k; ++i) {
    if (!(knots_[i] > knots_[i - 1])) throw Error(ErrorCode::InvalidArgument, "spline knots must increase");
  }
  if (k == 2) return;  // straight line, second derivatives stay zero

  // Thomas algorithm on the interior unknowns M_1..M_{k-2}; the factorisation
  // depends only on the knots and is shared by every row.
  const std::size_t m = k - 2;
  std::vector<double> h(k - 1);
  for (std::size_t i = 0; i + 1 < k; ++i) h[i] = knots_[i + 1] - knots_[i];
  std::vector<double> diag(m), upper(m), scale(m);
  for (std::size_t j = 0; j < m; ++j) {
    diag[j] = 2.0 * (h[j] + h[j + 1]);
    upper[j] = h[j + 1];
  }
  // Forward elimination coefficients.
  std::vector<double> cprime(m), denom(m);
  denom[0] = diag[0];
  cprime[0] = upper[0] / denom[0];
  for (std::size_t j = 1; j < m; ++j) {
    denom[j] = diag[j] - h[j] * cprime[j - 1];
    cprime[j] = upper[j] / denom[j];
  }

  std::vector<double> rhs(m);
  for (std::size_t r = 0; r < values_.rows(); ++r) {
    auto y = values_.row(r);
    for (std::size_t j = 0; j < m; ++j) {
      rhs[j] = 6.0 * ((y[j + 2] - y[j + 1]) / h[j + 1] - (y[j + 1] - y[j]) / h[j]);
    }
    rhs[0] /= denom[0];
    for (std::size_t j = 1; j < m; ++j) rhs[j] = (rhs[j] - h[j] * rhs[j - 1]) / denom[j];
    auto out = second_.row(r);
    out[m] = rhs[m - 1];
    for (std::size_t j = m - 1; j-- > 0;) {
      rhs[j] -= cprime[j] * rhs[j + 1];
      out[j + 1] = rhs[j];
    }
  }
}

void NaturalCubicSpline::evaluate_grid(std::size_t r, std::span<double> out) const {
  auto y = values_.row(r);
  auto m2 = second_.row(r);
  std::size_t seg = 0;
  const std::size_t last = knots_.size() - 2;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double t = static_cast<double>(i);
    while (seg < last && t > knots_[seg + 1]) ++seg;
    const double h = knots_[seg + 1] - knots_[seg];
    const double a = (knots_[seg + 1] - t) / h;
    const double b = 1.0 - a;
    out[i] = a * y[seg] + b * y[seg + 1] + ((a * a * a - a) * m2[seg] + (b * b * b - b) * m2[seg + 1]) * h * h / 6.0;
  }
}

double NaturalCubicSpline::operator()(std::size_t r, double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  std::size_t seg = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
  seg = std::min(seg, knots_.size() - 2);
  auto y = values_.row(r);
  auto m2 = second_.row(r);
  const double h = knots_[seg + 1] - knots_[seg];
  const double a = (knots_[seg + 1] - t) / h;
  const double b = 1.0 - a;
  return a * y[seg] + b * y[seg + 1] + ((a * a * a - a) * m2[seg] + (b * b * b - b) * m2[seg + 1]) * h * h / 6.0;
}

}  // namespace memdeeg
