#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "envicp/dataset.hpp"

namespace envicp::regress {

struct OlsFit {
  std::vector<std::string> subset;
  double intercept = 0.0;
  std::vector<double> coefficients;
  std::vector<double> residuals;
  bool rank_deficient = false;
  /// Residual sum of squares was at rounding level relative to y; residuals
  /// were set to exactly zero.
  bool exact_fit = false;
};

/// Least squares with intercept via complete orthogonal decomposition of the
/// centered design; minimum-norm coefficients when rank deficient.
/// Throws ComputeError("underdetermined system") when n <= columns + 1.
OlsFit ols(const Eigen::MatrixXd& x, std::span<const double> y);

/// Regresses `target` on the named columns.
OlsFit ols(const Dataset& data, std::span<const std::string> subset, const std::string& target);

double residual_sum_of_squares(const OlsFit& fit);

}  // namespace envicp::regress
