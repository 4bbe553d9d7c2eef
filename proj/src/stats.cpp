#include "peerfx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "peerfx/error.hpp"
#include "peerfx/glm.hpp"

namespace peerfx {

namespace {

const boost::math::normal kStdNormal;

double z_quantile(double p) { return boost::math::quantile(kStdNormal, p); }
double phi_cdf(double z) { return boost::math::cdf(kStdNormal, z); }

void check_unit_open(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) {
    throw Error(ErrorKind::InvalidInput, std::string(name) + " must lie in (0, 1)");
  }
}

void check_group_sizes(double n1, double n2) {
  if (!(n1 >= 2.0 && n2 >= 2.0) || !std::isfinite(n1) || !std::isfinite(n2)) {
    throw Error(ErrorKind::InvalidInput, "group sizes must be at least 2");
  }
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

double cohens_h(double p1, double p2) {
  if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0)) {
    throw Error(ErrorKind::InvalidInput, "proportions must lie in [0, 1]");
  }
  return 2.0 * std::asin(std::sqrt(p1)) - 2.0 * std::asin(std::sqrt(p2));
}

double detectable_h(double n1, double n2, double alpha, double power) {
  check_group_sizes(n1, n2);
  check_unit_open(alpha, "alpha");
  check_unit_open(power, "power");
  return (z_quantile(1.0 - alpha / 2.0) + z_quantile(power)) * std::sqrt(1.0 / n1 + 1.0 / n2);
}

double power_two_proportions(double h, double n1, double n2, double alpha) {
  check_group_sizes(n1, n2);
  check_unit_open(alpha, "alpha");
  return phi_cdf(h / std::sqrt(1.0 / n1 + 1.0 / n2) - z_quantile(1.0 - alpha / 2.0));
}

double multinomial_min_n(double t, double margin) {
  if (!(t > 0.0) || !(margin > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "t and E must be positive");
  }
  return t * t / (4.0 * margin * margin);
}

double multinomial_margin_for_n(double t, double n) {
  if (!(t > 0.0) || !(n > 0.0)) throw Error(ErrorKind::InvalidInput, "t and n must be positive");
  return t / (2.0 * std::sqrt(n));
}

namespace {

// P(X <= m) for X ~ Poisson(lambda); 0 for m < 0.
double pois_cdf(double lambda, long long m) {
  if (m < 0) return 0.0;
  if (lambda == 0.0) return 1.0;
  return boost::math::cdf(boost::math::poisson_distribution<double>(lambda),
                          static_cast<double>(m));
}

}  // namespace

double sison_glaz_coverage(std::span<const std::uint64_t> counts, int c) {
  long long n = 0;
  for (auto x : counts) n += static_cast<long long>(x);
  if (n <= 0) throw Error(ErrorKind::InvalidInput, "counts sum to zero");

  double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
  double log_prob_x = 0.0;
  for (auto xi : counts) {
    const double lambda = static_cast<double>(xi);
    const long long a = static_cast<long long>(xi) + c;
    const long long b = std::max<long long>(static_cast<long long>(xi) - c, 0);
    const double den = pois_cdf(lambda, a) - pois_cdf(lambda, b - 1);
    std::array<double, 4> mu{};
    // Factorial moments of the truncated Poisson on [b, a].
    for (int r = 1; r <= 4; ++r) {
      const double inner = pois_cdf(lambda, a - r) - pois_cdf(lambda, b - r - 1);
      mu[static_cast<std::size_t>(r - 1)] = std::pow(lambda, r) * inner / den;
    }
    const double m1 = mu[0];
    const double m2 = mu[1] + mu[0] - mu[0] * mu[0];
    const double m3 = mu[2] + mu[1] * (3.0 - 3.0 * m1) + (m1 - 3.0 * m1 * m1 + 2.0 * m1 * m1 * m1);
    const double m4 = mu[3] + mu[2] * (6.0 - 4.0 * m1) + mu[1] * (7.0 - 12.0 * m1 + 6.0 * m1 * m1) +
                      m1 - 4.0 * m1 * m1 + 6.0 * std::pow(m1, 3) - 3.0 * std::pow(m1, 4);
    s1 += m1;
    s2 += m2;
    s3 += m3;
    s4 += m4 - 3.0 * m2 * m2;
    log_prob_x += std::log(den);
  }
  const double nd = static_cast<double>(n);
  const double z = (nd - s1) / std::sqrt(s2);
  const double g1 = s3 / std::pow(s2, 1.5);
  const double g2 = s4 / (s2 * s2);
  const double z2 = z * z;
  const double poly = 1.0 + g1 * (z2 * z - 3.0 * z) / 6.0 + g2 * (z2 * z2 - 6.0 * z2 + 3.0) / 24.0 +
                      g1 * g1 * (z2 * z2 * z2 - 15.0 * z2 * z2 + 45.0 * z2 - 15.0) / 72.0;
  const double f = poly * std::exp(-z2 / 2.0) / std::sqrt(2.0 * M_PI);
  // 1 / P(N = n) for N ~ Poisson(n), on the log scale.
  const double log_inv_pn = -(nd * std::log(nd) - nd - std::lgamma(nd + 1.0));
  return std::exp(log_inv_pn + log_prob_x) * f / std::sqrt(s2);
}

SisonGlazResult sison_glaz_ci(std::span<const std::uint64_t> counts, double alpha) {
  check_unit_open(alpha, "alpha");
  if (counts.empty()) throw Error(ErrorKind::InvalidInput, "no categories");
  long long n = 0;
  for (auto x : counts) n += static_cast<long long>(x);
  if (n <= 0) throw Error(ErrorKind::InvalidInput, "counts sum to zero");
  const double nd = static_cast<double>(n);
  const double conf = 1.0 - alpha;

  SisonGlazResult res;
  if (counts.size() == 1) {
    res.intervals.push_back({1.0, 1.0, 1.0});
    return res;
  }

  double prev = 0.0, cur = 0.0;
  long long found = -1;
  for (long long cc = 1; cc <= n; ++cc) {
    cur = sison_glaz_coverage(counts, static_cast<int>(cc));
    if (cur > conf && prev < conf) {
      found = cc;
      break;
    }
    prev = cur;
  }
  if (found < 0) throw Error(ErrorKind::Degenerate, "coverage never brackets the confidence level");
  res.c = static_cast<int>(found - 1);
  res.coverage_c = prev;
  res.coverage_c_plus1 = cur;
  res.gamma = (conf - prev) / (cur - prev);
  for (auto x : counts) {
    const double p = static_cast<double>(x) / nd;
    res.intervals.push_back({p, std::max(0.0, p - res.c / nd),
                             std::min(1.0, p + res.c / nd + 2.0 * res.gamma / nd)});
  }
  return res;
}

namespace {

double log_factorial(std::uint64_t k) { return std::lgamma(static_cast<double>(k) + 1.0); }

struct Margins {
  std::array<std::uint64_t, 2> row{};
  std::array<std::uint64_t, 3> col{};
  std::uint64_t total = 0;
};

Margins margins_of(const Table2x3& t) {
  Margins m;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      m.row[i] += t[i][j];
      m.col[j] += t[i][j];
    }
  }
  m.total = m.row[0] + m.row[1];
  return m;
}

double log_margin_constant(const Margins& m) {
  double c = -log_factorial(m.total);
  for (auto r : m.row) c += log_factorial(r);
  for (auto k : m.col) c += log_factorial(k);
  return c;
}

double log_table_term(const Table2x3& t) {
  double s = 0.0;
  for (const auto& row : t) {
    for (auto v : row) s += log_factorial(v);
  }
  return s;
}

}  // namespace

double table_probability(const Table2x3& table) {
  const Margins m = margins_of(table);
  if (m.total == 0) throw Error(ErrorKind::InvalidInput, "empty table");
  return std::exp(log_margin_constant(m) - log_table_term(table));
}

double fisher_exact_2x3(const Table2x3& table) {
  const Margins m = margins_of(table);
  if (m.total == 0) throw Error(ErrorKind::InvalidInput, "empty table");
  if (m.row[0] == 0 || m.row[1] == 0) return 1.0;
  const double lc = log_margin_constant(m);
  const double log_obs = lc - log_table_term(table);
  const double threshold = log_obs + std::log1p(1e-7);

  double p = 0.0;
  const std::uint64_t r0 = m.row[0];
  for (std::uint64_t a = 0; a <= std::min(r0, m.col[0]); ++a) {
    for (std::uint64_t b = 0; b <= std::min(r0 - a, m.col[1]); ++b) {
      const std::uint64_t c = r0 - a - b;
      if (c > m.col[2]) continue;
      const Table2x3 t = {{{a, b, c}, {m.col[0] - a, m.col[1] - b, m.col[2] - c}}};
      const double lp = lc - log_table_term(t);
      if (lp <= threshold) p += std::exp(lp);
    }
  }
  return std::min(p, 1.0);
}

std::vector<double> mid_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::InvalidInput, "spearman_rho needs two equal-length vectors of size >= 2");
  }
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  const double mx = mean_of(rx), my = mean_of(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorKind::Degenerate, "spearman_rho undefined for a constant vector");
  }
  return sxy / std::sqrt(sxx * syy);
}

TestResult welch_t(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || y.size() < 2) {
    throw Error(ErrorKind::InvalidInput, "welch_t needs at least 2 values per group");
  }
  const double mx = mean_of(x), my = mean_of(y);
  const double vx = sample_variance(x, mx) / static_cast<double>(x.size());
  const double vy = sample_variance(y, my) / static_cast<double>(y.size());
  if (vx + vy == 0.0) throw Error(ErrorKind::Degenerate, "welch_t: both groups have zero variance");
  TestResult r;
  r.difference = mx - my;
  r.statistic = (mx - my) / std::sqrt(vx + vy);
  r.df = (vx + vy) * (vx + vy) /
         (vx * vx / static_cast<double>(x.size() - 1) + vy * vy / static_cast<double>(y.size() - 1));
  const boost::math::students_t dist(r.df);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic)));
  return r;
}

namespace {

struct RankSum {
  std::vector<double> ranks;  // pooled, x first
  double w = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
};

RankSum rank_sum(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw Error(ErrorKind::InvalidInput, "rank-sum test needs two groups");
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  RankSum rs;
  rs.ranks = mid_ranks(pooled);
  for (std::size_t i = 0; i < x.size(); ++i) rs.w += rs.ranks[i];
  const double nx = static_cast<double>(x.size());
  rs.w -= nx * (nx + 1.0) / 2.0;
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    rs.tie_term += t * t * t - t;
    i = j;
  }
  return rs;
}

}  // namespace

TestResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y) {
  const RankSum rs = rank_sum(x, y);
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  const double n = nx + ny;
  const double var = nx * ny / 12.0 * ((n + 1.0) - rs.tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) throw Error(ErrorKind::Degenerate, "rank-sum test: all values tied");
  const double d = rs.w - nx * ny / 2.0;
  const double correction = d > 0.0 ? 0.5 : (d < 0.0 ? -0.5 : 0.0);
  TestResult r;
  r.statistic = rs.w;
  const double z = (d - correction) / std::sqrt(var);
  r.p_value = std::min(1.0, 2.0 * std::min(phi_cdf(z), 1.0 - phi_cdf(z)));
  return r;
}

TestResult wilcoxon_rank_sum_exact(std::span<const double> x, std::span<const double> y) {
  if (x.size() > 8 || y.size() > 8) {
    throw Error(ErrorKind::InvalidInput, "exact rank-sum limited to groups of at most 8");
  }
  const RankSum rs = rank_sum(x, y);
  if (rs.tie_term == static_cast<double>(rs.ranks.size()) * (rs.ranks.size() * rs.ranks.size() - 1.0)) {
    throw Error(ErrorKind::Degenerate, "rank-sum test: all values tied");
  }
  const std::size_t n = rs.ranks.size(), k = x.size();
  const double offset = static_cast<double>(k) * (static_cast<double>(k) + 1.0) / 2.0;
  const double eps = 1e-9;
  std::uint64_t total = 0, le = 0, ge = 0;
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t start,
                                                                     std::size_t left, double sum) {
    if (left == 0) {
      const double w = sum - offset;
      ++total;
      if (w <= rs.w + eps) ++le;
      if (w >= rs.w - eps) ++ge;
      return;
    }
    for (std::size_t i = start; i + left <= n; ++i) walk(i + 1, left - 1, sum + rs.ranks[i]);
  };
  walk(0, k, 0.0);
  TestResult r;
  r.statistic = rs.w;
  const double t = static_cast<double>(total);
  r.p_value = std::min(1.0, 2.0 * std::min(le / t, ge / t));
  return r;
}

const char* to_string(BalanceMethod m) noexcept {
  return m == BalanceMethod::WelchT ? "welch_t" : "wilcoxon";
}

BalanceRow balance_row(const std::string& name, std::span<const double> treated,
                       std::span<const double> control, BalanceMethod method) {
  BalanceRow row;
  row.covariate = name;
  row.method = method;
  row.n_treated = treated.size();
  row.n_control = control.size();
  const TestResult t =
      method == BalanceMethod::WelchT ? welch_t(treated, control) : wilcoxon_rank_sum(treated, control);
  row.difference = t.difference;
  row.p_value = t.p_value;
  row.unbalanced = row.p_value < kBalanceLevel;
  return row;
}

std::vector<BalanceRow> covariate_balance(const StudyData& data) {
  const std::size_t n = data.graph.node_count();
  if (data.roster.size() != n || data.plan.eligible.size() != n) {
    throw Error(ErrorKind::InvalidInput, "roster, plan and graph sizes disagree");
  }
  const auto treated = data.plan.treated(data.graph);
  const auto metrics = node_metrics(data.graph);
  std::vector<std::optional<double>> base(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (data.roster[i].aspiration[0]) base[i] = *data.roster[i].aspiration[0];
  }
  const auto peer = peer_mean(data.graph, base, MissingFriendPolicy::Skip);

  struct Spec {
    std::string name;
    BalanceMethod method;
    std::function<std::optional<double>(std::size_t)> value;
  };
  auto cov = [&](Covariate c) {
    return [&data, c](std::size_t i) { return data.roster[i].covariate(c); };
  };
  const std::vector<Spec> specs = {
      {"asp_t0", BalanceMethod::Wilcoxon, [&](std::size_t i) { return base[i]; }},
      {"class_social", BalanceMethod::Wilcoxon, cov(Covariate::ClassSocial)},
      {"income_asp", BalanceMethod::WelchT, cov(Covariate::IncomeAsp)},
      {"grades", BalanceMethod::WelchT, cov(Covariate::Grades)},
      {"edu_pref", BalanceMethod::Wilcoxon, cov(Covariate::EduPref)},
      {"risk_pref", BalanceMethod::WelchT, cov(Covariate::RiskPref)},
      {"depression", BalanceMethod::Wilcoxon, cov(Covariate::Depression)},
      {"self_efficacy", BalanceMethod::Wilcoxon, cov(Covariate::SelfEfficacy)},
      {"grit", BalanceMethod::Wilcoxon, cov(Covariate::Grit)},
      {"female", BalanceMethod::Wilcoxon,
       [&](std::size_t i) -> std::optional<double> {
         return data.roster[i].gender == "F" ? 1.0 : 0.0;
       }},
      {"mother_edu", BalanceMethod::Wilcoxon, cov(Covariate::MotherEdu)},
      {"state", BalanceMethod::Wilcoxon, cov(Covariate::State)},
      {"transitivity", BalanceMethod::WelchT,
       [&](std::size_t i) { return metrics[i].local_transitivity; }},
      {"peer_mean_t0", BalanceMethod::WelchT, [&](std::size_t i) { return peer[i]; }},
  };

  std::vector<BalanceRow> rows;
  for (const auto& s : specs) {
    std::vector<double> t, c;
    for (std::size_t i = 0; i < n; ++i) {
      if (!data.plan.eligible[i]) continue;
      const auto v = s.value(i);
      if (!v) continue;
      (treated[i] ? t : c).push_back(*v);
    }
    // A covariate that is constant or absent in the sample has no test.
    try {
      rows.push_back(balance_row(s.name, t, c, s.method));
    } catch (const Error&) {
    }
  }
  return rows;
}

namespace {

DesignMatrix attrition_matrix(const std::vector<std::string>& names,
                              const std::vector<std::vector<std::optional<double>>>& cols,
                              const std::vector<int>& r) {
  const std::size_t n = r.size();
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = true;
    for (const auto& c : cols) ok = ok && c[i].has_value();
    if (ok) rows.push_back(i);
  }
  if (rows.empty()) throw Error(ErrorKind::EmptySample, "attrition: no complete rows");
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const double first = *cols[j][rows.front()];
    bool varies = false;
    for (auto i : rows) varies = varies || *cols[j][i] != first;
    if (varies) keep.push_back(j);
  }
  DesignMatrix dm;
  dm.columns.push_back(kInterceptName);
  for (auto j : keep) dm.columns.push_back(names[j]);
  dm.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(keep.size() + 1));
  dm.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r_i = 0; r_i < rows.size(); ++r_i) {
    const auto ri = static_cast<Eigen::Index>(r_i);
    dm.x(ri, 0) = 1.0;
    for (std::size_t k = 0; k < keep.size(); ++k) {
      dm.x(ri, static_cast<Eigen::Index>(k + 1)) = *cols[keep[k]][rows[r_i]];
    }
    dm.y(ri) = r[rows[r_i]];
  }
  dm.rows.assign(rows.begin(), rows.end());
  dm.dropped_missing = n - rows.size();
  return dm;
}

}  // namespace

AttritionReport attrition_mipo(const StudyData& data, const AttritionOptions& options) {
  check_unit_open(options.alpha, "alpha");
  if (options.bins == 0) throw Error(ErrorKind::InvalidInput, "histogram needs at least one bin");
  const std::size_t n = data.graph.node_count();
  if (data.roster.size() != n || data.plan.eligible.size() != n) {
    throw Error(ErrorKind::InvalidInput, "roster, plan and graph sizes disagree");
  }
  AttritionReport rep;
  rep.alpha = options.alpha;
  rep.n_students = n;
  std::vector<int> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = data.roster[i].aspiration[2].has_value() ? 1 : 0;
    rep.n_reported += static_cast<std::size_t>(r[i]);
  }
  if (n == 0 || rep.n_reported == 0) {
    throw Error(ErrorKind::Degenerate, "attrition: no student reported at endline");
  }
  rep.attrition_rate = 1.0 - static_cast<double>(rep.n_reported) / static_cast<double>(n);
  if (rep.n_reported == n) return rep;

  const auto treated = data.plan.treated(data.graph);
  std::vector<std::optional<double>> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = treated[i];

  {
    DesignMatrix dm = attrition_matrix({"z"}, {z}, r);
    if (dm.n_columns() < 2) throw Error(ErrorKind::Degenerate, "attrition: z is constant");
    const FitResult fit = fit_logistic(dm);
    LogitTest t;
    t.coefficient = fit.coefficients(1);
    t.se = fit.standard_errors(CovarianceFlavor::Model)(1);
    t.p_value = wald_p_value(t.coefficient, t.se);
    t.n = dm.n_rows();
    std::array<double, 2> hits{}, tot{};
    for (std::size_t i = 0; i < n; ++i) {
      hits[treated[i]] += r[i];
      tot[treated[i]] += 1.0;
    }
    t.rate_z0 = hits[0] / tot[0];
    t.rate_z1 = hits[1] / tot[1];
    rep.on_treatment = t;
    rep.mipo_violated = t.p_value < options.alpha;
  }

  if (options.covariate_model) {
    try {
      std::vector<std::string> names = {"z", kPeerMeanColumn};
      std::vector<std::optional<double>> base(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (data.panel.baseline[i]) base[i] = *data.panel.baseline[i];
      }
      std::vector<std::vector<std::optional<double>>> cols = {
          z, peer_mean(data.graph, base, MissingFriendPolicy::Skip)};
      NamedColumns cov = full_covariates(data);
      names.insert(names.end(), cov.names.begin(), cov.names.end());
      cols.insert(cols.end(), cov.values.begin(), cov.values.end());
      const DesignMatrix dm = attrition_matrix(names, cols, r);
      const FitResult fit = fit_logistic(dm);
      const Eigen::VectorXd p = logistic_fitted(fit, dm.x);
      const std::size_t bins = options.bins;
      std::vector<HistogramBin> hist;
      for (int arm = 0; arm < 2; ++arm) {
        for (std::size_t b = 0; b < bins; ++b) {
          hist.push_back({static_cast<double>(b) / bins, static_cast<double>(b + 1) / bins, 0, arm});
        }
      }
      for (Eigen::Index k = 0; k < p.size(); ++k) {
        const int arm = treated[dm.rows[static_cast<std::size_t>(k)]];
        auto b = static_cast<std::size_t>(p(k) * static_cast<double>(bins));
        b = std::min(b, bins - 1);
        ++hist[static_cast<std::size_t>(arm) * bins + b].count;
      }
      rep.histogram = std::move(hist);
    } catch (const Error& e) {
      rep.covariate_model_error = e.what();
    }
  }
  return rep;
}

}  // namespace peerfx
