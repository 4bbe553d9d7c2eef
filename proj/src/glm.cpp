#include "peerfx/glm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include <boost/math/distributions/normal.hpp>

#include "peerfx/error.hpp"

namespace peerfx {

const char* to_string(CovarianceFlavor f) noexcept {
  switch (f) {
    case CovarianceFlavor::Model: return "model";
    case CovarianceFlavor::HC1: return "hc1";
    case CovarianceFlavor::HC3: return "hc3";
  }
  return "?";
}

CovarianceFlavor parse_covariance_flavor(const std::string& s) {
  if (s == "model") return CovarianceFlavor::Model;
  if (s == "hc1" || s == "HC1") return CovarianceFlavor::HC1;
  if (s == "hc3" || s == "HC3") return CovarianceFlavor::HC3;
  throw Error(ErrorKind::Usage, "unknown covariance flavor '" + s + "' (model, hc1, hc3)");
}

std::optional<std::size_t> DesignMatrix::column_index(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

void DesignMatrix::validate() const {
  if (static_cast<std::size_t>(x.cols()) != columns.size())
    throw Error(ErrorKind::InvalidInput, "design matrix column names do not match its width");
  if (x.rows() != y.size())
    throw Error(ErrorKind::InvalidInput, "design matrix and response differ in length");
  if (!rows.empty() && rows.size() != static_cast<std::size_t>(x.rows()))
    throw Error(ErrorKind::InvalidInput, "row ids do not match the design matrix");
  std::unordered_set<std::string> seen;
  for (const auto& c : columns)
    if (!seen.insert(c).second)
      throw Error(ErrorKind::InvalidInput, "duplicate design column '" + c + "'");
  if (!x.allFinite()) throw Error(ErrorKind::InvalidInput, "design matrix has non-finite cells");
}

const Eigen::MatrixXd& FitResult::covariance(CovarianceFlavor f) const {
  switch (f) {
    case CovarianceFlavor::HC1: return cov_hc1;
    case CovarianceFlavor::HC3: return cov_hc3;
    case CovarianceFlavor::Model: break;
  }
  return cov_model;
}

Eigen::VectorXd FitResult::standard_errors(CovarianceFlavor f) const {
  return covariance(f).diagonal().cwiseMax(0.0).cwiseSqrt();
}

Eigen::VectorXd FitResult::block(std::size_t category_block) const {
  const auto p = static_cast<Eigen::Index>(columns.size());
  return coefficients.segment(static_cast<Eigen::Index>(category_block) * p, p);
}

double wald_p_value(double estimate, double se) {
  if (!(se > 0.0)) return estimate == 0.0 ? 1.0 : 0.0;
  static const boost::math::normal standard;
  return 2.0 * boost::math::cdf(boost::math::complement(standard, std::abs(estimate / se)));
}

namespace {

constexpr double kSeparationEps = 1e-8;

double log1pexp(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

void fill_fit_stats(FitResult& fit) {
  fit.deviance = -2.0 * fit.log_likelihood;
  fit.aic = fit.deviance + 2.0 * static_cast<double>(fit.n_params);
  fit.bic = fit.deviance + static_cast<double>(fit.n_params) * std::log(static_cast<double>(fit.n_obs));
}

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff()))
    throw Error(ErrorKind::SingularMatrix, std::string("singular ") + what);
  Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

// Maps each response code to its position among non-reference categories, -1
// for the reference.
std::vector<int> category_positions(const Eigen::VectorXi& y, const std::vector<int>& categories,
                                    int reference) {
  std::vector<int> pos(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) == reference) {
      pos[static_cast<std::size_t>(i)] = -1;
      continue;
    }
    auto it = std::find(categories.begin(), categories.end(), y(i));
    if (it == categories.end())
      throw Error(ErrorKind::InvalidInput, "response code " + std::to_string(y(i)) +
                                               " is not a model category");
    pos[static_cast<std::size_t>(i)] = static_cast<int>(it - categories.begin());
  }
  return pos;
}

// Row-wise category probabilities, non-reference columns only.
Eigen::MatrixXd multinomial_probs(const Eigen::MatrixXd& x, const Eigen::VectorXd& theta,
                                  std::size_t k, Eigen::VectorXd* log_denominator = nullptr) {
  const Eigen::Index p = x.cols();
  const Eigen::Map<const Eigen::MatrixXd> coef(theta.data(), p, static_cast<Eigen::Index>(k));
  Eigen::MatrixXd eta = x * coef;  // n x k
  Eigen::MatrixXd probs(eta.rows(), eta.cols());
  if (log_denominator) log_denominator->resize(eta.rows());
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    const double m = std::max(0.0, eta.row(i).maxCoeff());
    const double denom = std::exp(-m) + (eta.row(i).array() - m).exp().sum();
    probs.row(i) = (eta.row(i).array() - m).exp() / denom;
    if (log_denominator) (*log_denominator)(i) = m + std::log(denom);
  }
  return probs;
}

std::vector<std::string> multinomial_terms(const std::vector<std::string>& columns,
                                           const std::vector<int>& categories) {
  std::vector<std::string> terms;
  for (int c : categories)
    for (const auto& col : columns) terms.push_back(std::to_string(c) + ":" + col);
  return terms;
}

void check_fit_input(const DesignMatrix& dm) {
  dm.validate();
  if (dm.n_rows() <= dm.n_columns())
    throw Error(ErrorKind::InvalidInput, "need more rows (" + std::to_string(dm.n_rows()) +
                                             ") than columns (" + std::to_string(dm.n_columns()) + ")");
  check_full_rank(dm);
}

}  // namespace

void check_full_rank(const DesignMatrix& dm) {
  std::vector<std::string> offending;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < dm.x.cols(); ++j) {
    const double norm = dm.x.col(j).norm();
    if (norm == 0.0) {
      offending.push_back(dm.columns[static_cast<std::size_t>(j)]);
      continue;
    }
    Eigen::MatrixXd sub(dm.x.rows(), static_cast<Eigen::Index>(kept.size()) + 1);
    for (std::size_t k = 0; k < kept.size(); ++k)
      sub.col(static_cast<Eigen::Index>(k)) = dm.x.col(kept[k]) / dm.x.col(kept[k]).norm();
    sub.col(sub.cols() - 1) = dm.x.col(j) / norm;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
    qr.setThreshold(1e-10);
    if (qr.rank() == sub.cols()) {
      kept.push_back(j);
    } else {
      offending.push_back(dm.columns[static_cast<std::size_t>(j)]);
    }
  }
  if (!offending.empty()) {
    std::string names;
    for (const auto& c : offending) names += (names.empty() ? "" : ", ") + c;
    throw RankDeficientError("design matrix is rank deficient; dependent columns: " + names,
                             offending);
  }
}

double logistic_log_likelihood(const DesignMatrix& dm, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = dm.x * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += dm.y(i) * eta(i) - log1pexp(eta(i));
  return ll;
}

Eigen::VectorXd logistic_score(const DesignMatrix& dm, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = dm.x * beta;
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) resid(i) = dm.y(i) - sigmoid(eta(i));
  return dm.x.transpose() * resid;
}

Eigen::VectorXd logistic_fitted(const FitResult& fit, const Eigen::MatrixXd& x) {
  Eigen::VectorXd eta = x * fit.coefficients;
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = sigmoid(eta(i));
  return eta;
}

FitResult fit_logistic(const DesignMatrix& dm, const FitOptions& options) {
  check_fit_input(dm);
  for (Eigen::Index i = 0; i < dm.y.size(); ++i)
    if (dm.y(i) != 0 && dm.y(i) != 1)
      throw Error(ErrorKind::InvalidInput, "logistic response must be 0/1");

  const Eigen::Index n = dm.x.rows(), p = dm.x.cols();
  FitResult fit;
  fit.kind = ModelKind::Logistic;
  fit.columns = dm.columns;
  fit.terms = dm.columns;
  fit.categories = {1};
  fit.reference = 0;
  fit.n_obs = static_cast<std::size_t>(n);
  fit.n_params = static_cast<std::size_t>(p);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd prob(n), w(n);
  double ll = logistic_log_likelihood(dm, beta);
  double last_step = 0.0;
  Eigen::VectorXd score;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    const Eigen::VectorXd eta = dm.x * beta;
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = sigmoid(eta(i));
      w(i) = prob(i) * (1.0 - prob(i));
    }
    score = dm.x.transpose() * (dm.y.cast<double>() - prob);
    if (score.lpNorm<Eigen::Infinity>() < options.tol) {
      fit.converged = true;
      break;
    }
    const Eigen::MatrixXd info = dm.x.transpose() * w.asDiagonal() * dm.x;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success) break;
    const Eigen::VectorXd step = ldlt.solve(score);

    double t = 1.0, ll_new = ll;
    Eigen::VectorXd candidate;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      candidate = beta + t * step;
      ll_new = logistic_log_likelihood(dm, candidate);
      if (ll_new >= ll - 1e-12 * (1.0 + std::abs(ll))) break;
    }
    last_step = (t * step).lpNorm<Eigen::Infinity>();
    beta = candidate;
    const double rel_change = std::abs(ll_new - ll) / (std::abs(ll) + 1e-300);
    ll = ll_new;
    if (rel_change < 1e-6 * options.tol && last_step < 1e-12 * (1.0 + beta.norm())) {
      ++iter;
      score = logistic_score(dm, beta);
      fit.converged = score.lpNorm<Eigen::Infinity>() < std::sqrt(options.tol);
      break;
    }
  }
  if (score.size() == 0) score = logistic_score(dm, beta);

  const Eigen::VectorXd fitted = [&] {
    Eigen::VectorXd eta = dm.x * beta;
    for (Eigen::Index i = 0; i < n; ++i) eta(i) = sigmoid(eta(i));
    return eta;
  }();
  const bool extreme = (fitted.array() < kSeparationEps).any() ||
                       (fitted.array() > 1.0 - kSeparationEps).any();
  if (extreme && (last_step > 1e-4 || !fit.converged))
    throw Error(ErrorKind::Separation,
                "separation: fitted probabilities reach 0/1 while coefficients diverge");

  fit.coefficients = beta;
  fit.iterations = iter;
  fit.max_abs_score = score.lpNorm<Eigen::Infinity>();
  fit.log_likelihood = logistic_log_likelihood(dm, beta);
  fill_fit_stats(fit);

  Eigen::VectorXd wf = fitted.array() * (1.0 - fitted.array());
  fit.cov_model = invert_spd(dm.x.transpose() * wf.asDiagonal() * dm.x, "information matrix");
  fit.cov_hc1 = sandwich_covariance(fit, dm, CovarianceFlavor::HC1);
  fit.cov_hc3 = sandwich_covariance(fit, dm, CovarianceFlavor::HC3);
  return fit;
}

double multinomial_log_likelihood(const DesignMatrix& dm, const std::vector<int>& categories,
                                  int reference, const Eigen::VectorXd& theta) {
  const auto pos = category_positions(dm.y, categories, reference);
  const Eigen::Index p = dm.x.cols();
  const Eigen::Map<const Eigen::MatrixXd> coef(theta.data(), p,
                                               static_cast<Eigen::Index>(categories.size()));
  const Eigen::MatrixXd eta = dm.x * coef;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    const double m = std::max(0.0, eta.row(i).maxCoeff());
    const double lse = m + std::log(std::exp(-m) + (eta.row(i).array() - m).exp().sum());
    const int c = pos[static_cast<std::size_t>(i)];
    ll += (c >= 0 ? eta(i, c) : 0.0) - lse;
  }
  return ll;
}

Eigen::VectorXd multinomial_score(const DesignMatrix& dm, const std::vector<int>& categories,
                                  int reference, const Eigen::VectorXd& theta) {
  const auto pos = category_positions(dm.y, categories, reference);
  const std::size_t k = categories.size();
  const Eigen::Index p = dm.x.cols();
  const Eigen::MatrixXd probs = multinomial_probs(dm.x, theta, k);
  Eigen::MatrixXd resid = -probs;
  for (Eigen::Index i = 0; i < resid.rows(); ++i)
    if (pos[static_cast<std::size_t>(i)] >= 0) resid(i, pos[static_cast<std::size_t>(i)]) += 1.0;
  const Eigen::MatrixXd g = dm.x.transpose() * resid;  // p x k
  return Eigen::Map<const Eigen::VectorXd>(g.data(), p * static_cast<Eigen::Index>(k));
}

namespace {

// Observed = expected information for the multinomial logit.
Eigen::MatrixXd multinomial_information(const Eigen::MatrixXd& x, const Eigen::MatrixXd& probs) {
  const Eigen::Index p = x.cols(), k = probs.cols();
  Eigen::MatrixXd info(p * k, p * k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a; b < k; ++b) {
      Eigen::VectorXd w = (a == b) ? Eigen::VectorXd(probs.col(a).array() * (1.0 - probs.col(a).array()))
                                   : Eigen::VectorXd(-probs.col(a).array() * probs.col(b).array());
      const Eigen::MatrixXd blk = x.transpose() * w.asDiagonal() * x;
      info.block(a * p, b * p, p, p) = blk;
      if (a != b) info.block(b * p, a * p, p, p) = blk.transpose();
    }
  }
  return info;
}

}  // namespace

FitResult fit_multinomial(const DesignMatrix& dm, int reference, const FitOptions& options,
                          std::vector<int> categories) {
  check_fit_input(dm);
  std::set<int> observed(dm.y.data(), dm.y.data() + dm.y.size());
  if (categories.empty()) {
    categories.assign(observed.begin(), observed.end());
  } else {
    std::sort(categories.begin(), categories.end());
    for (int c : categories)
      if (!observed.count(c))
        throw Error(ErrorKind::EmptySample, "category " + std::to_string(c) + " has no observations");
    for (int c : observed)
      if (!std::binary_search(categories.begin(), categories.end(), c))
        throw Error(ErrorKind::InvalidInput, "unexpected response code " + std::to_string(c));
  }
  if (!observed.count(reference))
    throw Error(ErrorKind::InvalidInput,
                "reference category " + std::to_string(reference) + " not present in the data");
  if (categories.size() < 2)
    throw Error(ErrorKind::InvalidInput, "multinomial response needs at least two categories");
  categories.erase(std::remove(categories.begin(), categories.end(), reference), categories.end());

  const std::size_t k = categories.size();
  const Eigen::Index n = dm.x.rows(), p = dm.x.cols();
  const Eigen::Index dim = p * static_cast<Eigen::Index>(k);

  FitResult fit;
  fit.kind = ModelKind::Multinomial;
  fit.columns = dm.columns;
  fit.terms = multinomial_terms(dm.columns, categories);
  fit.categories = categories;
  fit.reference = reference;
  fit.n_obs = static_cast<std::size_t>(n);
  fit.n_params = static_cast<std::size_t>(dim);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  double ll = multinomial_log_likelihood(dm, categories, reference, theta);
  double last_step = 0.0;
  Eigen::VectorXd score;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    score = multinomial_score(dm, categories, reference, theta);
    if (score.lpNorm<Eigen::Infinity>() < options.tol) {
      fit.converged = true;
      break;
    }
    const Eigen::MatrixXd probs = multinomial_probs(dm.x, theta, k);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(multinomial_information(dm.x, probs));
    if (ldlt.info() != Eigen::Success) break;
    const Eigen::VectorXd step = ldlt.solve(score);
    double t = 1.0, ll_new = ll;
    Eigen::VectorXd candidate;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      candidate = theta + t * step;
      ll_new = multinomial_log_likelihood(dm, categories, reference, candidate);
      if (ll_new >= ll - 1e-12 * (1.0 + std::abs(ll))) break;
    }
    last_step = (t * step).lpNorm<Eigen::Infinity>();
    theta = candidate;
    const double rel_change = std::abs(ll_new - ll) / (std::abs(ll) + 1e-300);
    ll = ll_new;
    if (rel_change < 1e-6 * options.tol && last_step < 1e-12 * (1.0 + theta.norm())) {
      ++iter;
      score = multinomial_score(dm, categories, reference, theta);
      fit.converged = score.lpNorm<Eigen::Infinity>() < std::sqrt(options.tol);
      break;
    }
  }
  if (score.size() == 0) score = multinomial_score(dm, categories, reference, theta);

  const Eigen::MatrixXd probs = multinomial_probs(dm.x, theta, k);
  const Eigen::VectorXd ref_prob = 1.0 - probs.rowwise().sum().array();
  const bool extreme = (probs.array() < kSeparationEps).any() ||
                       (ref_prob.array() < kSeparationEps).any();
  if (extreme && (last_step > 1e-4 || !fit.converged))
    throw Error(ErrorKind::Separation,
                "separation: fitted category probabilities reach 0 while coefficients diverge");

  fit.coefficients = theta;
  fit.iterations = iter;
  fit.max_abs_score = score.lpNorm<Eigen::Infinity>();
  fit.log_likelihood = multinomial_log_likelihood(dm, categories, reference, theta);
  fill_fit_stats(fit);
  fit.cov_model = invert_spd(multinomial_information(dm.x, probs), "information matrix");
  fit.cov_hc1 = sandwich_covariance(fit, dm, CovarianceFlavor::HC1);
  fit.cov_hc3 = sandwich_covariance(fit, dm, CovarianceFlavor::HC3);
  return fit;
}

Eigen::MatrixXd sandwich_covariance(const FitResult& fit, const DesignMatrix& dm,
                                    CovarianceFlavor flavor) {
  if (flavor == CovarianceFlavor::Model) return fit.cov_model;
  if (fit.cov_model.size() == 0)
    throw Error(ErrorKind::SingularMatrix, "fit has no bread matrix");
  const Eigen::MatrixXd& bread = fit.cov_model;
  const Eigen::Index n = dm.x.rows(), p = dm.x.cols();
  const Eigen::Index k = static_cast<Eigen::Index>(fit.categories.size());
  const Eigen::Index dim = p * k;

  // Residuals y - p per non-reference category.
  Eigen::MatrixXd probs;
  Eigen::MatrixXd resid;
  if (fit.kind == ModelKind::Logistic) {
    probs = logistic_fitted(fit, dm.x);
    resid = dm.y.cast<double>() - probs;
  } else {
    probs = multinomial_probs(dm.x, fit.coefficients, static_cast<std::size_t>(k));
    const auto pos = category_positions(dm.y, fit.categories, fit.reference);
    resid = -probs;
    for (Eigen::Index i = 0; i < n; ++i)
      if (pos[static_cast<std::size_t>(i)] >= 0) resid(i, pos[static_cast<std::size_t>(i)]) += 1.0;
  }

  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd s(dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = dm.x.row(i).transpose();
    Eigen::VectorXd r = resid.row(i).transpose();
    if (flavor == CovarianceFlavor::HC3) {
      // (I - W_i A_i)^-1 r_i with A_i = X_i B X_i'; reduces to r / (1 - h_ii).
      Eigen::MatrixXd a(k, k);
      for (Eigen::Index u = 0; u < k; ++u)
        for (Eigen::Index v = 0; v < k; ++v)
          a(u, v) = xi.dot(bread.block(u * p, v * p, p, p) * xi);
      Eigen::MatrixXd w(k, k);
      for (Eigen::Index u = 0; u < k; ++u)
        for (Eigen::Index v = 0; v < k; ++v)
          w(u, v) = (u == v ? probs(i, u) : 0.0) - probs(i, u) * probs(i, v);
      const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(k, k) - w * a;
      r = m.partialPivLu().solve(r);
    }
    for (Eigen::Index u = 0; u < k; ++u) s.segment(u * p, p) = r(u) * xi;
    meat.noalias() += s * s.transpose();
  }
  Eigen::MatrixXd cov = bread * meat * bread;
  if (flavor == CovarianceFlavor::HC1)
    cov *= static_cast<double>(n) / static_cast<double>(n - dim);
  return 0.5 * (cov + cov.transpose());
}

std::vector<MarginalEffect> average_marginal_effects(const FitResult& fit, const DesignMatrix& dm,
                                                     CovarianceFlavor flavor) {
  if (fit.kind != ModelKind::Logistic)
    throw Error(ErrorKind::InvalidInput, "average marginal effects need a logistic fit");
  const Eigen::MatrixXd& cov = fit.covariance(flavor);
  const Eigen::Index n = dm.x.rows(), p = dm.x.cols();
  const Eigen::VectorXd& beta = fit.coefficients;
  std::vector<MarginalEffect> out;
  for (Eigen::Index j = 0; j < p; ++j) {
    const std::string& name = dm.columns[static_cast<std::size_t>(j)];
    if (name == kInterceptName) continue;
    const bool binary = (dm.x.col(j).array() == 0.0 || dm.x.col(j).array() == 1.0).all();
    MarginalEffect me;
    me.term = name;
    me.discrete = binary;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
    double total = 0.0;
    if (binary) {
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd x1 = dm.x.row(i).transpose(), x0 = x1;
        x1(j) = 1.0;
        x0(j) = 0.0;
        const double p1 = sigmoid(x1.dot(beta)), p0 = sigmoid(x0.dot(beta));
        total += p1 - p0;
        grad += p1 * (1.0 - p1) * x1 - p0 * (1.0 - p0) * x0;
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd xi = dm.x.row(i).transpose();
        const double pi = sigmoid(xi.dot(beta));
        const double d = pi * (1.0 - pi);
        total += beta(j) * d;
        grad += beta(j) * d * (1.0 - 2.0 * pi) * xi;
        grad(j) += d;
      }
    }
    me.estimate = total / static_cast<double>(n);
    grad /= static_cast<double>(n);
    me.se = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
    me.z = me.se > 0.0 ? me.estimate / me.se : 0.0;
    me.p_value = wald_p_value(me.estimate, me.se);
    out.push_back(std::move(me));
  }
  return out;
}

RelativeRiskRatio relative_risk_ratio(double coefficient, double se) {
  RelativeRiskRatio r;
  r.coefficient = coefficient;
  r.rrr = std::exp(coefficient);
  r.se = r.rrr * se;
  r.p_value = wald_p_value(coefficient, se);
  return r;
}

std::vector<RelativeRiskRatio> relative_risk_ratios(const FitResult& fit, CovarianceFlavor flavor) {
  const Eigen::VectorXd se = fit.standard_errors(flavor);
  const std::size_t p = fit.columns.size();
  std::vector<RelativeRiskRatio> out;
  for (std::size_t b = 0; b < fit.categories.size(); ++b) {
    for (std::size_t j = 0; j < p; ++j) {
      const auto idx = static_cast<Eigen::Index>(b * p + j);
      auto r = relative_risk_ratio(fit.coefficients(idx), se(idx));
      r.term = fit.columns[j];
      r.category = fit.categories[b];
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace peerfx
