#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "envicp/error.hpp"
#include "envicp/regress.hpp"
#include "envicp/rng.hpp"
#include "oracles.hpp"

using namespace envicp;
using envicp::regress::ols;

namespace {

Eigen::MatrixXd design(const std::vector<std::vector<double>>& columns, std::size_t n) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = columns[j][i];
  }
  return x;
}

// |X^T r| <= 1e-8 (||X|| ||y|| + 1) per column and the same bound for sum(r).
void expect_orthogonal(const Eigen::MatrixXd& x, const std::vector<double>& y, const regress::OlsFit& fit) {
  const Eigen::Map<const Eigen::VectorXd> r(fit.residuals.data(), static_cast<Eigen::Index>(fit.residuals.size()));
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const double bound = 1e-8 * (x.norm() * yv.norm() + 1.0);
  for (Eigen::Index j = 0; j < x.cols(); ++j) EXPECT_LE(std::abs(x.col(j).dot(r)), bound);
  EXPECT_LE(std::abs(r.sum()), bound);
}

}  // namespace

TEST(Ols, ExactLine) {
  std::vector<double> x(20);
  std::vector<double> y(20);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = 0.37 * static_cast<double>(i) - 2.0;
    y[i] = 2.0 * x[i] + 3.0;
  }
  const auto fit = ols(design({x}, x.size()), y);
  EXPECT_NEAR(fit.intercept, 3.0, 1e-10);
  ASSERT_EQ(fit.coefficients.size(), 1u);
  EXPECT_NEAR(fit.coefficients[0], 2.0, 1e-10);
  for (double r : fit.residuals) EXPECT_NEAR(r, 0.0, 1e-10);
  EXPECT_TRUE(fit.exact_fit);
  EXPECT_FALSE(fit.rank_deficient);
}

TEST(Ols, EmptySubsetIsTheMean) {
  const std::vector<double> y{1.0, 4.0, 2.0, 7.0, 6.0};
  const auto fit = ols(Eigen::MatrixXd(5, 0), y);
  EXPECT_DOUBLE_EQ(fit.intercept, 4.0);
  EXPECT_TRUE(fit.coefficients.empty());
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_DOUBLE_EQ(fit.residuals[i], y[i] - 4.0);
}

TEST(Ols, DuplicatedColumnMatchesSingleColumnFit) {
  Stream s(11);
  std::vector<double> x(80);
  std::vector<double> y(80);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = s.normal(0, 1);
    y[i] = 1.5 * x[i] - 0.5 + s.normal(0, 1);
  }
  const auto single = ols(design({x}, x.size()), y);
  const auto doubled = ols(design({x, x}, x.size()), y);
  EXPECT_FALSE(single.rank_deficient);
  EXPECT_TRUE(doubled.rank_deficient);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(doubled.residuals[i], single.residuals[i], 1e-8);
  // Minimum-norm solution splits the coefficient evenly.
  EXPECT_NEAR(doubled.coefficients[0], single.coefficients[0] / 2.0, 1e-8);
  EXPECT_NEAR(doubled.coefficients[1], single.coefficients[0] / 2.0, 1e-8);
}

TEST(Ols, UnderdeterminedIsAnError) {
  const std::vector<double> y{1.0, 2.0, 3.0};
  try {
    ols(Eigen::MatrixXd::Random(3, 2), y);
    FAIL() << "expected ComputeError";
  } catch (const ComputeError& e) {
    EXPECT_STREQ(e.what(), "underdetermined system");
  }
  EXPECT_NO_THROW(ols(Eigen::MatrixXd::Random(4, 2), std::vector<double>{1, 2, 3, 5}));
}

TEST(Ols, MatchesNormalEquationsOracle) {
  Stream s(12);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<std::vector<double>> cols(3, std::vector<double>(50));
    std::vector<double> y(50);
    for (std::size_t i = 0; i < 50; ++i) {
      for (auto& c : cols) c[i] = s.normal(0, 1);
      y[i] = 0.5 + cols[0][i] - 2.0 * cols[1][i] + 0.25 * cols[2][i] + s.normal(0, 1);
    }
    const auto x = design(cols, 50);
    const auto fit = ols(x, y);
    const auto beta = oracle::normal_equations(cols, y);
    EXPECT_NEAR(fit.intercept, beta[0], 1e-8);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(fit.coefficients[j], beta[j + 1], 1e-8);
    expect_orthogonal(x, y, fit);
    for (std::size_t i = 0; i < 50; ++i) {
      const double predicted = fit.intercept + fit.coefficients[0] * cols[0][i] + fit.coefficients[1] * cols[1][i] +
                               fit.coefficients[2] * cols[2][i];
      EXPECT_NEAR(fit.residuals[i], y[i] - predicted, 1e-10);
    }
  }
}

TEST(Ols, AddingAColumnNeverIncreasesRss) {
  Stream s(13);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<std::vector<double>> cols(4, std::vector<double>(40));
    std::vector<double> y(40);
    for (std::size_t i = 0; i < 40; ++i) {
      for (auto& c : cols) c[i] = s.normal(0, 1);
      y[i] = cols[0][i] + s.normal(0, 1);
    }
    double previous = regress::residual_sum_of_squares(ols(Eigen::MatrixXd(40, 0), y));
    for (std::size_t p = 1; p <= cols.size(); ++p) {
      const std::vector<std::vector<double>> used(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(p));
      const double rss = regress::residual_sum_of_squares(ols(design(used, 40), y));
      EXPECT_LE(rss, previous * (1.0 + 1e-12));
      previous = rss;
    }
  }
}

TEST(Ols, DatasetOverloadUsesNamedColumns) {
  Dataset d;
  d.columns.push_back({"a", VariableKind::continuous, {1, 2, 3, 4, 5, 6}});
  d.columns.push_back({"b", VariableKind::continuous, {0, 1, 0, 1, 0, 2}});
  d.columns.push_back({"y", VariableKind::continuous, {3, 6, 7, 10, 11, 15}});
  const std::vector<std::string> subset{"a", "b"};
  const auto fit = ols(d, subset, "y");
  EXPECT_EQ(fit.subset, subset);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-10);
  EXPECT_NEAR(fit.coefficients[0], 2.0, 1e-10);
  EXPECT_NEAR(fit.coefficients[1], 1.0, 1e-10);
}
