#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "memdeeg/matrix.hpp"

namespace memdeeg {

// Natural cubic spline through shared knots for several value rows at once.
// Knots must be strictly increasing and number at least two.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline(std::span<const double> knots, const Matrix& values);

  // Evaluates row r at integer abscissae 0..out.size()-1.
  void evaluate_grid(std::size_t r, std::span<double> out) const;

  double operator()(std::size_t r, double t) const;

  std::size_t rows() const noexcept { return values_.rows(); }

 private:
  std::vector<double> knots_;
  Matrix values_;  // rows x knots
  Matrix second_;  // second derivatives at the knots
};

}  // namespace memdeeg
