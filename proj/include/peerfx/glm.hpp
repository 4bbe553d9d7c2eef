#pragma once

// Maximum-likelihood binary and multinomial logit with model-based and
// heteroskedasticity-consistent covariance, average marginal effects and
// relative risk ratios.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peerfx/graph.hpp"

namespace peerfx {

inline constexpr const char* kInterceptName = "(Intercept)";

enum class CovarianceFlavor { Model, HC1, HC3 };

const char* to_string(CovarianceFlavor f) noexcept;
CovarianceFlavor parse_covariance_flavor(const std::string& s);

struct DesignMatrix {
  std::vector<std::string> columns;  // intercept first, unique
  Eigen::MatrixXd x;                 // rows x columns, no missing cells
  Eigen::VectorXi y;                 // 0/1, or category codes
  std::vector<NodeIndex> rows;       // source node per row; may be empty
  std::size_t dropped_missing = 0;   // rows removed by listwise deletion

  std::size_t n_rows() const noexcept { return static_cast<std::size_t>(x.rows()); }
  std::size_t n_columns() const noexcept { return static_cast<std::size_t>(x.cols()); }
  std::optional<std::size_t> column_index(const std::string& name) const;

  // Throws InvalidInput on shape mismatch, duplicate names, non-finite cells.
  void validate() const;
};

struct FitOptions {
  int max_iter = 100;
  double tol = 1e-8;  // on the max-norm of the score
};

enum class ModelKind { Logistic, Multinomial };

struct FitResult {
  ModelKind kind = ModelKind::Logistic;
  std::vector<std::string> columns;
  std::vector<std::string> terms;  // one per coefficient; "<category>:<column>" for multinomial
  std::vector<int> categories;     // multinomial: non-reference categories, coefficient block order
  int reference = 0;

  Eigen::VectorXd coefficients;    // multinomial: stacked per non-reference category
  Eigen::MatrixXd cov_model;
  Eigen::MatrixXd cov_hc1;
  Eigen::MatrixXd cov_hc3;

  double log_likelihood = 0.0;
  double deviance = 0.0;  // -2 log L
  double aic = 0.0;       // deviance + 2p
  double bic = 0.0;       // deviance + p ln n
  std::size_t n_obs = 0;
  std::size_t n_params = 0;
  bool converged = false;
  int iterations = 0;
  double max_abs_score = 0.0;

  const Eigen::MatrixXd& covariance(CovarianceFlavor f) const;
  Eigen::VectorXd standard_errors(CovarianceFlavor f) const;
  // Coefficients of one category block (multinomial) or the whole vector.
  Eigen::VectorXd block(std::size_t category_block) const;
};

// Fails with RankDeficientError naming columns that are (numerically) linear
// combinations of earlier columns, including all-zero columns.
void check_full_rank(const DesignMatrix& dm);

// IRLS with step halving. Throws Separation when fitted probabilities reach
// 1e-8 of 0 or 1 while coefficients keep moving.
FitResult fit_logistic(const DesignMatrix& dm, const FitOptions& options = {});

// Newton-Raphson on the full multinomial log-likelihood. `categories`, when
// given, lists every expected category (an empty one is an error); otherwise
// the observed codes are used.
FitResult fit_multinomial(const DesignMatrix& dm, int reference, const FitOptions& options = {},
                          std::vector<int> categories = {});

// Bread (X'WX)^-1 with a score outer-product meat: n/(n-p) for HC1; scores
// divided by (1 - h_ii) for HC3 (block generalization for multinomial).
Eigen::MatrixXd sandwich_covariance(const FitResult& fit, const DesignMatrix& dm,
                                    CovarianceFlavor flavor);

double logistic_log_likelihood(const DesignMatrix& dm, const Eigen::VectorXd& beta);
Eigen::VectorXd logistic_score(const DesignMatrix& dm, const Eigen::VectorXd& beta);
double multinomial_log_likelihood(const DesignMatrix& dm, const std::vector<int>& categories,
                                  int reference, const Eigen::VectorXd& theta);
Eigen::VectorXd multinomial_score(const DesignMatrix& dm, const std::vector<int>& categories,
                                  int reference, const Eigen::VectorXd& theta);

// Fitted probabilities of the logistic model.
Eigen::VectorXd logistic_fitted(const FitResult& fit, const Eigen::MatrixXd& x);

double wald_p_value(double estimate, double se);

struct MarginalEffect {
  std::string term;
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  bool discrete = false;  // 0/1 regressor: counterfactual difference
};

std::vector<MarginalEffect> average_marginal_effects(
    const FitResult& fit, const DesignMatrix& dm, CovarianceFlavor flavor = CovarianceFlavor::HC3);

struct RelativeRiskRatio {
  std::string term;
  int category = 0;
  double coefficient = 0.0;
  double rrr = 1.0;
  double se = 0.0;  // first-order delta method: rrr * se(coefficient)
  double p_value = 1.0;
};

RelativeRiskRatio relative_risk_ratio(double coefficient, double se);

std::vector<RelativeRiskRatio> relative_risk_ratios(
    const FitResult& fit, CovarianceFlavor flavor = CovarianceFlavor::Model);

}  // namespace peerfx
