#include "envicp/regress.hpp"

#include <cmath>

#include "envicp/error.hpp"

namespace envicp::regress {
namespace {

constexpr double kRankTolerance = 1e-10;
// Residual norm below this fraction of ||y - mean(y)|| (plus rounding level
// of ||y||) is treated as an exact fit.
constexpr double kExactFitTolerance = 1e-10;
constexpr double kRoundingLevel = 64.0 * 2.220446049250313e-16;

}  // namespace

OlsFit ols(const Eigen::MatrixXd& x, std::span<const double> y) {
  const auto n = static_cast<Eigen::Index>(y.size());
  const Eigen::Index p = x.cols();
  if (x.rows() != n) throw ValidationError("ols: design and response differ in length");
  if (n <= p + 1) throw ComputeError("underdetermined system");

  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  OlsFit fit;
  const double y_mean = yv.mean();
  Eigen::VectorXd fitted = Eigen::VectorXd::Constant(n, y_mean);
  if (p > 0) {
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const Eigen::MatrixXd xc = x.rowwise() - x_mean;
    const Eigen::VectorXd yc = yv.array() - y_mean;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(kRankTolerance);
    cod.compute(xc);
    const Eigen::VectorXd beta = cod.solve(yc);
    fit.rank_deficient = cod.rank() < p;
    fit.intercept = y_mean - x_mean.dot(beta);
    fit.coefficients.assign(beta.data(), beta.data() + p);
    fitted = ((xc * beta).array() + y_mean).matrix();
  } else {
    fit.intercept = y_mean;
  }

  const Eigen::VectorXd r = yv - fitted;
  fit.residuals.assign(r.data(), r.data() + n);
  const double spread = (yv.array() - y_mean).matrix().norm();
  if (r.norm() <= kExactFitTolerance * spread + kRoundingLevel * yv.norm()) {
    fit.exact_fit = true;
    std::fill(fit.residuals.begin(), fit.residuals.end(), 0.0);
  }
  return fit;
}

OlsFit ols(const Dataset& data, std::span<const std::string> subset, const std::string& target) {
  const auto& y = data.column(target).values;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(subset.size()));
  for (std::size_t j = 0; j < subset.size(); ++j) {
    const auto& col = data.column(subset[j]).values;
    x.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(col.data(), static_cast<Eigen::Index>(col.size()));
  }
  OlsFit fit = ols(x, y);
  fit.subset.assign(subset.begin(), subset.end());
  return fit;
}

double residual_sum_of_squares(const OlsFit& fit) {
  double s = 0.0;
  for (double r : fit.residuals) s += r * r;
  return s;
}

}  // namespace envicp::regress
