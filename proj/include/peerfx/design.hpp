#pragma once

// Treatment-eligibility selection, school matching and arm randomization.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peerfx/graph.hpp"
#include "peerfx/student.hpp"

namespace peerfx {

inline constexpr double kDefaultSelectionProportion = 0.25;

// school -> share of the school's students to select.
using ProportionMap = std::map<std::string, double>;

struct SchoolSelection {
  std::string school;
  std::size_t n_students = 0;
  double median_strength = 0.0;
  std::size_t pool_size = 0;  // strength strictly above the median
  std::size_t target = 0;     // round(proportion * n), ties to even
  std::size_t selected = 0;
  bool shortfall = false;     // pool smaller than target; whole pool selected
};

struct Selection {
  std::vector<std::uint8_t> eligible;  // per node
  std::vector<SchoolSelection> schools;
};

// Betweenness quartile (0-3) of value against quartile cut points of `sample`.
int quartile_bin(double value, std::span<const double> sample);

// Per school: pool = strength above the school median; pool stratified by
// gender x within-school betweenness quartile; target allocated over strata by
// largest remainders and drawn uniformly within each stratum. Each school has
// its own seeded stream, so the result does not depend on school order.
Selection select_eligible(const FriendshipGraph& g, std::span<const StudentRecord> roster,
                          std::span<const NodeMetrics> metrics, const ProportionMap& proportions,
                          std::uint64_t seed,
                          double default_proportion = kDefaultSelectionProportion);

struct SchoolFeatures {
  std::string school;
  double n_students = 0.0;
  double cohort_size = 0.0;
  double global_transitivity = 0.0;
};

struct SchoolPair {
  std::string first;
  std::string second;
  double distance = 0.0;
};

struct Matching {
  std::vector<SchoolPair> pairs;
  std::optional<std::string> unmatched;
};

// Greedy nearest-neighbor pairing on z-scored features, closest pair first.
Matching match_schools(std::span<const SchoolFeatures> features);

// school -> arm (1 = treated). One fair coin per pair, an independent coin for
// the unmatched school.
std::map<std::string, std::uint8_t> randomize_arms(std::span<const SchoolPair> pairs,
                                                   const std::optional<std::string>& unmatched,
                                                   std::uint64_t seed);

struct AssignmentPlan {
  std::vector<std::uint8_t> eligible;    // z_i, per node
  std::vector<std::uint8_t> school_arm;  // z^s, per school index
  std::vector<std::uint8_t> spillover;   // z_j^s, per node
  std::vector<SchoolPair> pairs;
  std::optional<std::string> unmatched;
  std::uint64_t seed = 0;

  // Eligible students in treated schools.
  std::vector<std::uint8_t> treated(const FriendshipGraph& g) const;
};

// 1 for non-eligible students of treated schools.
std::vector<std::uint8_t> derive_spillover_vector(const FriendshipGraph& g,
                                                  std::span<const std::uint8_t> eligible,
                                                  std::span<const std::uint8_t> school_arm);

struct DesignResult {
  AssignmentPlan plan;
  Selection selection;
  std::vector<SchoolFeatures> features;
};

// Full design: metrics, selection, matching on (size, target cohort,
// global transitivity), randomization and the spillover vector.
DesignResult design_experiment(const FriendshipGraph& g, std::span<const StudentRecord> roster,
                               const ProportionMap& proportions, std::uint64_t seed,
                               double default_proportion = kDefaultSelectionProportion);

}  // namespace peerfx
