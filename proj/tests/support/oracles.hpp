#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library code it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peerfx/graph.hpp"
#include "peerfx/rng.hpp"
#include "peerfx/student.hpp"

namespace oracle {

// ---------------------------------------------------------------- graphs

struct RandomNetwork {
  std::vector<peerfx::StudentRecord> roster;
  std::vector<peerfx::EdgeRow> edges;
};

inline std::string node_name(std::size_t s, std::size_t i) {
  return "s" + std::to_string(s) + "n" + std::to_string(i);
}

// Directed within-school edges with probability p and integer weights 1-5.
inline RandomNetwork random_network(peerfx::Rng& rng, std::size_t schools, std::size_t min_n,
                                    std::size_t max_n, double p) {
  RandomNetwork net;
  for (std::size_t s = 0; s < schools; ++s) {
    const std::size_t n = min_n + rng.below(max_n - min_n + 1);
    for (std::size_t i = 0; i < n; ++i) {
      peerfx::StudentRecord r;
      r.id = node_name(s, i);
      r.school = "school" + std::to_string(s);
      r.gender = rng.bernoulli(0.5) ? "F" : "M";
      r.aspiration[0] = 1 + static_cast<int>(rng.below(5));
      net.roster.push_back(r);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && rng.bernoulli(p))
          net.edges.push_back({node_name(s, i), node_name(s, j), 1.0 + static_cast<double>(rng.below(5))});
  }
  return net;
}

// Dense adjacency of one school: a[i][j] = 1 for an edge i -> j. Rows follow
// g.members(s).
inline std::vector<std::vector<int>> school_adjacency(const peerfx::FriendshipGraph& g,
                                                      peerfx::SchoolIndex s) {
  const auto members = g.members(s);
  const std::size_t n = members.size();
  std::vector<std::vector<int>> a(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && g.has_edge(members[i], members[j])) a[i][j] = 1;
  return a;
}

inline constexpr long kInf = std::numeric_limits<long>::max() / 4;

inline std::vector<std::vector<long>> floyd_warshall(std::vector<std::vector<int>> a, bool undirected) {
  const std::size_t n = a.size();
  std::vector<std::vector<long>> d(n, std::vector<long>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (a[i][j] || (undirected && a[j][i])) d[i][j] = std::min(d[i][j], 1L);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

// Directed betweenness from path counts: walks of length d(s, t) are exactly
// the shortest s-t paths, so sigma comes from adjacency-matrix powers.
inline std::vector<double> brute_betweenness(const std::vector<std::vector<int>>& a) {
  const std::size_t n = a.size();
  std::vector<double> cb(n, 0.0);
  if (n < 3) return cb;
  const auto d = floyd_warshall(a, false);
  std::vector<std::vector<std::vector<double>>> walks;  // walks[k][i][j]
  walks.push_back(std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
  for (std::size_t i = 0; i < n; ++i) walks[0][i][i] = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    std::vector<std::vector<double>> next(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t m = 0; m < n; ++m)
        if (walks[k - 1][i][m] != 0.0)
          for (std::size_t j = 0; j < n; ++j)
            if (a[m][j]) next[i][j] += walks[k - 1][i][m];
    walks.push_back(std::move(next));
  }
  auto sigma = [&](std::size_t s, std::size_t t) {
    return d[s][t] >= kInf ? 0.0 : walks[static_cast<std::size_t>(d[s][t])][s][t];
  };
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t) {
      if (s == t || d[s][t] >= kInf) continue;
      const double total = sigma(s, t);
      for (std::size_t v = 0; v < n; ++v) {
        if (v == s || v == t) continue;
        if (d[s][v] + d[v][t] == d[s][t]) cb[v] += sigma(s, v) * sigma(v, t) / total;
      }
    }
  const double norm = static_cast<double>(n - 1) * static_cast<double>(n - 2);
  for (auto& c : cb) c /= norm;
  return cb;
}

inline bool adjacent(const std::vector<std::vector<int>>& a, std::size_t i, std::size_t j) {
  return a[i][j] || a[j][i];
}

// Local clustering on the undirected projection; negative when degree < 2.
inline double brute_local_transitivity(const std::vector<std::vector<int>>& a, std::size_t v) {
  const std::size_t n = a.size();
  std::size_t k = 0, closed = 0;
  for (std::size_t i = 0; i < n; ++i) k += (i != v && adjacent(a, v, i));
  if (k < 2) return -1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (i != v && j != v && adjacent(a, v, i) && adjacent(a, v, j) && adjacent(a, i, j)) ++closed;
  return static_cast<double>(closed) / (static_cast<double>(k * (k - 1)) / 2.0);
}

// 3 x triangles / connected triples on the undirected projection; negative
// when there are no triples.
inline double brute_global_transitivity(const std::vector<std::vector<int>>& a) {
  const std::size_t n = a.size();
  std::uint64_t triangles = 0, triples = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        triangles += adjacent(a, i, j) && adjacent(a, j, k) && adjacent(a, i, k);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        triples += i != v && j != v && adjacent(a, v, i) && adjacent(a, v, j);
  if (triples == 0) return -1.0;
  return 3.0 * static_cast<double>(triangles) / static_cast<double>(triples);
}

// Centre j with an unordered pair {i, k}, a directed path through j between
// them, and no tie between i and k.
inline std::uint64_t brute_open_triangles(const std::vector<std::vector<int>>& a) {
  const std::size_t n = a.size();
  std::uint64_t count = 0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = i + 1; k < n; ++k) {
        if (i == j || k == j || adjacent(a, i, k)) continue;
        if ((a[i][j] && a[j][k]) || (a[k][j] && a[j][i])) ++count;
      }
  return count;
}

// Undirected diameter of the largest component (first one on size ties, in
// order of the lowest member).
inline std::size_t brute_diameter(const std::vector<std::vector<int>>& a) {
  const std::size_t n = a.size();
  if (n == 0) return 0;
  const auto d = floyd_warshall(a, true);
  std::vector<int> comp(n, -1);
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < n; ++i) {
    if (comp[i] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    std::size_t size = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (d[i][j] < kInf) {
        comp[j] = id;
        ++size;
      }
    sizes.push_back(size);
  }
  const int largest = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  long best = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (comp[i] == largest && comp[j] == largest) best = std::max(best, d[i][j]);
  return static_cast<std::size_t>(best);
}

// ---------------------------------------------------------- likelihoods

inline double log1p_exp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct Objective {
  virtual ~Objective() = default;
  virtual double value(const Eigen::VectorXd& theta) const = 0;  // to minimize
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const = 0;
};

// BFGS with a backtracking Armijo line search.
inline Eigen::VectorXd bfgs_minimize(const Objective& f, Eigen::VectorXd x, double gtol = 1e-11,
                                     int max_iter = 5000) {
  const Eigen::Index p = x.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd g = f.gradient(x);
  double fx = f.value(x);
  for (int it = 0; it < max_iter && g.lpNorm<Eigen::Infinity>() > gtol; ++it) {
    Eigen::VectorXd dir = -h * g;
    if (dir.dot(g) >= 0) {
      h.setIdentity();
      dir = -g;
    }
    double step = 1.0;
    Eigen::VectorXd xn;
    double fn = 0.0;
    bool accepted = false;
    for (int k = 0; k < 80; ++k) {
      xn = x + step * dir;
      fn = f.value(xn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * step * g.dot(dir)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd gn = f.gradient(xn);
    const Eigen::VectorXd s = xn - x, y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(p, p);
      h = (i - rho * s * y.transpose()) * h * (i - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    x = xn;
    g = gn;
    fx = fn;
  }
  return x;
}

struct LogisticObjective : Objective {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXi& y;
  LogisticObjective(const Eigen::MatrixXd& xx, const Eigen::VectorXi& yy) : x(xx), y(yy) {}

  double value(const Eigen::VectorXd& b) const override {
    double nll = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double eta = x.row(i).dot(b);
      nll += log1p_exp(eta) - (y(i) ? eta : 0.0);
    }
    return nll;
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& b) const override {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(b.size());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-x.row(i).dot(b)));
      g += (p - y(i)) * x.row(i).transpose();
    }
    return g;
  }
};

// theta stacks one coefficient block per non-reference category, in the
// order of `cats`.
struct MultinomialObjective : Objective {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXi& y;
  std::vector<int> cats;
  MultinomialObjective(const Eigen::MatrixXd& xx, const Eigen::VectorXi& yy, std::vector<int> c)
      : x(xx), y(yy), cats(std::move(c)) {}

  std::vector<double> etas(const Eigen::VectorXd& t, Eigen::Index i) const {
    const Eigen::Index p = x.cols();
    std::vector<double> e(cats.size());
    for (std::size_t b = 0; b < cats.size(); ++b)
      e[b] = x.row(i).dot(t.segment(static_cast<Eigen::Index>(b) * p, p));
    return e;
  }
  double value(const Eigen::VectorXd& t) const override {
    double nll = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto e = etas(t, i);
      double m = 0.0;
      for (double v : e) m = std::max(m, v);
      double s = std::exp(-m);
      for (double v : e) s += std::exp(v - m);
      const double lse = m + std::log(s);
      double own = 0.0;
      for (std::size_t b = 0; b < cats.size(); ++b)
        if (y(i) == cats[b]) own = e[b];
      nll += lse - own;
    }
    return nll;
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& t) const override {
    const Eigen::Index p = x.cols();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(t.size());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto e = etas(t, i);
      double m = 0.0;
      for (double v : e) m = std::max(m, v);
      double s = std::exp(-m);
      for (double v : e) s += std::exp(v - m);
      for (std::size_t b = 0; b < cats.size(); ++b) {
        const double prob = std::exp(e[b] - m) / s;
        const double r = prob - (y(i) == cats[b] ? 1.0 : 0.0);
        g.segment(static_cast<Eigen::Index>(b) * p, p) += r * x.row(i).transpose();
      }
    }
    return g;
  }
};

// Central-difference Hessian from an analytic gradient.
inline Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x, double h = 1e-5) {
  const Eigen::Index p = x.size();
  Eigen::MatrixXd hess(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::VectorXd a = x, b = x;
    a(j) += h;
    b(j) -= h;
    hess.col(j) = (f.gradient(a) - f.gradient(b)) / (2 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Average over rows of the derivative of the fitted probability with respect
// to column j, by central differences; for a 0/1 column the mean
// counterfactual difference.
inline double finite_difference_ame(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta, Eigen::Index j,
                                    bool discrete, double h = 1e-5) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::VectorXd hi = x.row(i).transpose(), lo = hi;
    if (discrete) {
      hi(j) = 1.0;
      lo(j) = 0.0;
      total += sigmoid(hi.dot(beta)) - sigmoid(lo.dot(beta));
    } else {
      hi(j) += h;
      lo(j) -= h;
      total += (sigmoid(hi.dot(beta)) - sigmoid(lo.dot(beta))) / (2 * h);
    }
  }
  return total / static_cast<double>(x.rows());
}

// ------------------------------------------------------------ statistics

inline double log_factorial(std::uint64_t n) {
  long double s = 0.0L;
  for (std::uint64_t k = 2; k <= n; ++k) s += std::log(static_cast<long double>(k));
  return static_cast<double>(s);
}

// Conditional exact test by enumerating every cell of every table with the
// observed margins.
inline double brute_fisher_2x3(const std::uint64_t t[2][3]) {
  const std::uint64_t r0 = t[0][0] + t[0][1] + t[0][2];
  const std::uint64_t c[3] = {t[0][0] + t[1][0], t[0][1] + t[1][1], t[0][2] + t[1][2]};
  const std::uint64_t n = r0 + t[1][0] + t[1][1] + t[1][2];
  const double constant = log_factorial(r0) + log_factorial(n - r0) + log_factorial(c[0]) +
                          log_factorial(c[1]) + log_factorial(c[2]) - log_factorial(n);
  auto logp = [&](std::uint64_t a, std::uint64_t b, std::uint64_t cc) {
    return constant - log_factorial(a) - log_factorial(b) - log_factorial(cc) - log_factorial(c[0] - a) -
           log_factorial(c[1] - b) - log_factorial(c[2] - cc);
  };
  const double observed = logp(t[0][0], t[0][1], t[0][2]);
  long double p = 0.0L;
  for (std::uint64_t a = 0; a <= c[0]; ++a)
    for (std::uint64_t b = 0; b <= c[1]; ++b)
      for (std::uint64_t cc = 0; cc <= c[2]; ++cc) {
        if (a + b + cc != r0) continue;
        const double lp = logp(a, b, cc);
        if (lp <= observed + 1e-7) p += std::exp(static_cast<long double>(lp));
      }
  return std::min(1.0, static_cast<double>(p));
}

// Mid-ranks by counting, O(n^2).
inline std::vector<double> brute_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Exact null distribution of the rank sum by dynamic programming over
// doubled mid-ranks; returns the two-sided p of min(1, 2 min tail).
inline double dp_wilcoxon_exact_p(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = brute_ranks(pooled);
  std::vector<int> twice(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) twice[i] = static_cast<int>(std::lround(2 * ranks[i]));
  const std::size_t m = x.size();
  const int maxsum = std::accumulate(twice.begin(), twice.end(), 0);
  // ways[k][s]: subsets of size k with doubled rank sum s.
  std::vector<std::vector<double>> ways(m + 1, std::vector<double>(static_cast<std::size_t>(maxsum) + 1, 0.0));
  ways[0][0] = 1.0;
  for (int r : twice)
    for (std::size_t k = m; k >= 1; --k)
      for (int s = maxsum; s >= r; --s) ways[k][static_cast<std::size_t>(s)] += ways[k - 1][static_cast<std::size_t>(s - r)];
  int observed = 0;
  for (std::size_t i = 0; i < m; ++i) observed += twice[i];
  double total = 0, le = 0, ge = 0;
  for (int s = 0; s <= maxsum; ++s) {
    const double w = ways[m][static_cast<std::size_t>(s)];
    total += w;
    if (s <= observed) le += w;
    if (s >= observed) ge += w;
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

// Student t density integrated with composite Simpson on [0, |t|]; two-sided p.
inline double t_two_sided_p(double t, double df) {
  const double logc = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  auto dens = [&](double u) { return std::exp(logc - (df + 1) / 2 * std::log1p(u * u / df)); };
  const double a = std::fabs(t);
  const int steps = 20000;
  const double h = a / steps;
  double s = dens(0) + dens(a);
  for (int k = 1; k < steps; ++k) s += dens(k * h) * (k % 2 ? 4 : 2);
  const double central = s * h / 3.0;
  return std::clamp(1.0 - 2.0 * central, 0.0, 1.0);
}

// Asymptotic Kolmogorov distribution P(sqrt(n) D > x) with Stephens' small-n
// adjustment.
inline double ks_uniform_p(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max(d, static_cast<double>(i + 1) / n - u[i]);
    d = std::max(d, u[i] - static_cast<double>(i) / n);
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

inline double binomial_pmf(std::uint64_t n, std::uint64_t k, double p) {
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                  static_cast<double>(k) * std::log(p) + static_cast<double>(n - k) * std::log1p(-p));
}

}  // namespace oracle
