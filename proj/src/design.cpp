#include "peerfx/design.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <tuple>

#include "peerfx/error.hpp"
#include "peerfx/rng.hpp"

namespace peerfx {

namespace {

constexpr std::uint64_t kMatchStream = 0x6d61746368ULL;
constexpr std::uint64_t kUnmatchedStream = 0x756e6d61746368ULL;

// Linear-interpolation quantile on sorted data.
double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.5);
}

std::size_t round_half_even(double x) { return static_cast<std::size_t>(std::nearbyint(x)); }

// Largest-remainder allocation of `total` over groups of the given sizes.
std::vector<std::size_t> allocate(std::span<const std::size_t> sizes, std::size_t total) {
  const std::size_t pool = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::size_t> alloc(sizes.size(), 0);
  if (pool == 0 || total == 0) return alloc;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    const double quota = static_cast<double>(total) * static_cast<double>(sizes[s]) /
                         static_cast<double>(pool);
    alloc[s] = std::min(sizes[s], static_cast<std::size_t>(std::floor(quota)));
    assigned += alloc[s];
    remainders.emplace_back(quota - std::floor(quota), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [rem, s] : remainders) {
    if (assigned >= total) break;
    if (alloc[s] < sizes[s]) {
      ++alloc[s];
      ++assigned;
    }
  }
  return alloc;
}

}  // namespace

int quartile_bin(double value, std::span<const double> sample) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  int bin = 0;
  for (double q : {0.25, 0.5, 0.75})
    if (value > quantile_sorted(sorted, q)) ++bin;
  return bin;
}

Selection select_eligible(const FriendshipGraph& g, std::span<const StudentRecord> roster,
                          std::span<const NodeMetrics> metrics, const ProportionMap& proportions,
                          std::uint64_t seed, double default_proportion) {
  if (roster.size() != g.node_count() || metrics.size() != g.node_count())
    throw Error(ErrorKind::InvalidInput, "roster/metrics do not match the graph");
  for (const auto& [school, p] : proportions) {
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(ErrorKind::InvalidInput,
                  "proportion for school '" + school + "' outside [0, 1]");
    if (!g.find_school(school))
      throw Error(ErrorKind::InvalidInput, "proportion given for unknown school '" + school + "'");
  }
  if (!(default_proportion >= 0.0 && default_proportion <= 1.0))
    throw Error(ErrorKind::InvalidInput, "default proportion outside [0, 1]");

  Selection result;
  result.eligible.assign(g.node_count(), 0);
  for (SchoolIndex s = 0; s < g.school_count(); ++s) {
    const auto members = g.members(s);
    SchoolSelection info;
    info.school = g.school_name(s);
    info.n_students = members.size();
    auto it = proportions.find(info.school);
    const double proportion = it != proportions.end() ? it->second : default_proportion;
    info.target = round_half_even(proportion * static_cast<double>(members.size()));

    std::vector<double> strength, between;
    for (NodeIndex i : members) {
      strength.push_back(metrics[i].strength);
      between.push_back(metrics[i].betweenness);
    }
    info.median_strength = median(strength);

    // Strata keyed by (gender, quartile); std::map keeps a stable order.
    std::map<std::pair<std::string, int>, std::vector<NodeIndex>> strata;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const NodeIndex i = members[k];
      if (!(metrics[i].strength > info.median_strength)) continue;
      ++info.pool_size;
      strata[{roster[i].gender, quartile_bin(metrics[i].betweenness, between)}].push_back(i);
    }

    Rng rng = Rng::stream(seed, hash_string(info.school));
    if (info.pool_size <= info.target) {
      info.shortfall = info.pool_size < info.target;
      for (auto& [key, nodes] : strata)
        for (NodeIndex i : nodes) result.eligible[i] = 1;
      info.selected = info.pool_size;
    } else {
      std::vector<std::size_t> sizes;
      for (const auto& [key, nodes] : strata) sizes.push_back(nodes.size());
      const auto alloc = allocate(sizes, info.target);
      std::size_t idx = 0;
      for (auto& [key, nodes] : strata) {
        // Partial Fisher-Yates.
        const std::size_t take = alloc[idx++];
        for (std::size_t a = 0; a < take; ++a) {
          const std::size_t b = a + rng.below(nodes.size() - a);
          std::swap(nodes[a], nodes[b]);
          result.eligible[nodes[a]] = 1;
        }
        info.selected += take;
      }
    }
    result.schools.push_back(std::move(info));
  }
  return result;
}

Matching match_schools(std::span<const SchoolFeatures> features) {
  const std::size_t n = features.size();
  if (n < 2) throw Error(ErrorKind::InvalidInput, "matching needs at least two schools");

  std::vector<std::array<double, 3>> z(n);
  for (std::size_t f = 0; f < 3; ++f) {
    auto get = [&](std::size_t i) {
      const auto& sf = features[i];
      return f == 0 ? sf.n_students : f == 1 ? sf.cohort_size : sf.global_transitivity;
    };
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += get(i);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (get(i) - mean) * (get(i) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n - 1));
    for (std::size_t i = 0; i < n; ++i) z[i][f] = sd > 0.0 ? (get(i) - mean) / sd : 0.0;
  }

  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  candidates.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t f = 0; f < 3; ++f) d2 += (z[i][f] - z[j][f]) * (z[i][f] - z[j][f]);
      candidates.emplace_back(std::sqrt(d2), i, j);
    }
  std::sort(candidates.begin(), candidates.end());

  Matching result;
  std::vector<bool> used(n, false);
  for (const auto& [d, i, j] : candidates) {
    if (used[i] || used[j]) continue;
    used[i] = used[j] = true;
    result.pairs.push_back({features[i].school, features[j].school, d});
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!used[i]) result.unmatched = features[i].school;
  return result;
}

std::map<std::string, std::uint8_t> randomize_arms(std::span<const SchoolPair> pairs,
                                                   const std::optional<std::string>& unmatched,
                                                   std::uint64_t seed) {
  std::map<std::string, std::uint8_t> arms;
  Rng rng = Rng::stream(seed, kMatchStream);
  for (const auto& p : pairs) {
    const bool first_treated = rng.bernoulli(0.5);
    arms[p.first] = first_treated ? 1 : 0;
    arms[p.second] = first_treated ? 0 : 1;
  }
  if (unmatched) {
    Rng coin = Rng::stream(seed, kUnmatchedStream);
    arms[*unmatched] = coin.bernoulli(0.5) ? 1 : 0;
  }
  return arms;
}

std::vector<std::uint8_t> AssignmentPlan::treated(const FriendshipGraph& g) const {
  std::vector<std::uint8_t> z(g.node_count(), 0);
  for (NodeIndex i = 0; i < g.node_count(); ++i)
    z[i] = (eligible[i] && school_arm[g.school_of(i)]) ? 1 : 0;
  return z;
}

std::vector<std::uint8_t> derive_spillover_vector(const FriendshipGraph& g,
                                                  std::span<const std::uint8_t> eligible,
                                                  std::span<const std::uint8_t> school_arm) {
  if (eligible.size() != g.node_count() || school_arm.size() != g.school_count())
    throw Error(ErrorKind::InvalidInput, "plan does not match the graph");
  std::vector<std::uint8_t> flag(g.node_count(), 0);
  for (NodeIndex i = 0; i < g.node_count(); ++i)
    flag[i] = (!eligible[i] && school_arm[g.school_of(i)]) ? 1 : 0;
  return flag;
}

DesignResult design_experiment(const FriendshipGraph& g, std::span<const StudentRecord> roster,
                               const ProportionMap& proportions, std::uint64_t seed,
                               double default_proportion) {
  const auto nm = node_metrics(g);
  const auto sm = school_metrics(g);
  DesignResult out;
  out.selection = select_eligible(g, roster, nm, proportions, seed, default_proportion);
  for (SchoolIndex s = 0; s < g.school_count(); ++s) {
    out.features.push_back({sm[s].school, static_cast<double>(sm[s].n_students),
                            static_cast<double>(out.selection.schools[s].target),
                            sm[s].global_transitivity.value_or(0.0)});
  }
  auto& plan = out.plan;
  plan.seed = seed;
  plan.eligible = out.selection.eligible;
  plan.school_arm.assign(g.school_count(), 0);
  if (g.school_count() >= 2) {
    auto matching = match_schools(out.features);
    const auto arms = randomize_arms(matching.pairs, matching.unmatched, seed);
    for (const auto& [school, arm] : arms) plan.school_arm[*g.find_school(school)] = arm;
    plan.pairs = std::move(matching.pairs);
    plan.unmatched = std::move(matching.unmatched);
  } else {
    Rng coin = Rng::stream(seed, kUnmatchedStream);
    plan.school_arm[0] = coin.bernoulli(0.5) ? 1 : 0;
    plan.unmatched = g.school_name(0);
  }
  plan.spillover = derive_spillover_vector(g, plan.eligible, plan.school_arm);
  return out;
}

}  // namespace peerfx
