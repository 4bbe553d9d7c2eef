#pragma once

// Synthetic multi-school populations with known structural coefficients, and
// Monte Carlo recovery of those coefficients through the full design and
// estimation pipeline.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "peerfx/analysis.hpp"
#include "peerfx/config.hpp"
#include "peerfx/design.hpp"
#include "peerfx/graph.hpp"
#include "peerfx/student.hpp"

namespace peerfx {

enum class NetworkModel { ErdosRenyi, FixedOutDegree };
enum class ErrorLaw { Logistic, Normal };
enum class OutcomeLaw { Binary, Multinomial };

struct SimScenario {
  std::size_t n_schools = 45;
  std::size_t students_min = 110;
  std::size_t students_max = 150;

  NetworkModel network = NetworkModel::FixedOutDegree;
  double edge_probability = 0.04;  // erdos_renyi
  std::size_t out_degree = 5;      // fixed_out_degree
  int weight_min = 1;
  int weight_max = 5;

  // P(baseline level = 1..5); normalized on use.
  std::array<double, 5> baseline_law = {25, 422, 554, 1005, 4066};
  double female_probability = 0.5;

  // Latent index alpha + beta * std peer mean + gamma * z + delta * G z
  // (+ school_effect * spillover flag).
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double school_effect = 0.0;
  ErrorLaw error = ErrorLaw::Logistic;

  // Binary: y^c = 1[index + u > 0], direction up with probability up_probability.
  // Multinomial: argmax of {0, index - up_shift/2, index + up_shift/2} plus
  // Gumbel noise over {stay, down, up}.
  OutcomeLaw outcome = OutcomeLaw::Binary;
  double up_probability = 0.5;
  double up_shift = 0.0;

  double selection_proportion = kDefaultSelectionProportion;

  // Endline non-response; attrition_treated overrides the rate for treated
  // students when set.
  double attrition = 0.0;
  std::optional<double> attrition_treated;

  std::uint64_t seed = 0;
  std::size_t replications = 100;
  std::size_t threads = 1;
  double test_alpha = 0.05;

  // Throws InvalidInput on out-of-range fields.
  void validate() const;
};

// Keys mirror the field names; seed is required; network is erdos_renyi or
// fixed_out_degree; baseline_law is a comma list of five weights.
SimScenario parse_scenario(const KeyValues& kv);
std::string scenario_to_text(const SimScenario& s);

struct Population {
  std::vector<StudentRecord> roster;  // aspirations at t0 only
  std::vector<EdgeRow> edges;
  FriendshipGraph graph;
};

// Deterministic given (scenario, seed). Throws InvalidInput when out_degree
// is not below the smallest school size.
Population generate_population(const SimScenario& scenario, std::uint64_t seed);

struct SimOutcomes {
  std::vector<StudentRecord> roster;  // with t1 and t2 aspirations
  OutcomePanel panel;
  std::vector<double> index;          // latent index without noise, per node
};

// Transitions t0 -> t1 and t1 -> t2 share the index and draw independent
// noise. A move is one level; at a scale end the direction points inward.
SimOutcomes generate_outcomes(const SimScenario& scenario, const Population& pop,
                              const AssignmentPlan& plan, std::uint64_t seed);

struct ParameterRecovery {
  std::string model;  // eq1 or eq2
  std::string term;
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  std::optional<double> mc_se;  // sd / sqrt(R); undefined for R = 1
  double coverage = 0.0;        // nominal 95% HC3 intervals
  std::size_t n = 0;
};

struct RecoveryReport {
  std::size_t replications = 0;
  std::size_t failed = 0;  // replications whose fit raised
  std::vector<std::string> failures;
  bool mc_se_defined = false;
  std::vector<ParameterRecovery> parameters;
  double test_alpha = 0.05;
  double rejection_rate = 0.0;        // eq1 treated AME test
  double positive_rate = 0.0;         // eq1 treated AME > 0 and significant
  double spill_rejection_rate = 0.0;  // eq2 school-effect AME test
  double mean_students = 0.0;
  double mean_eligible = 0.0;
};

struct ReplicationResult {
  bool ok = false;
  std::string failure;
  std::size_t n_students = 0;
  std::size_t n_eligible = 0;
  // eq1 then eq2: coefficient and HC3 se per term, in ParameterRecovery order.
  std::vector<double> estimates;
  std::vector<double> ses;
  double treated_ame_p = 1.0;
  double treated_ame = 0.0;
  double spill_ame_p = 1.0;
};

struct ReplicationData {
  Population population;
  DesignResult design;
  SimOutcomes outcomes;
};

// Population, design and outcomes of one replication, each from its own
// stream of hash(seed, index).
ReplicationData simulate_replication_data(const SimScenario& scenario, std::size_t index);

ReplicationResult run_replication(const SimScenario& scenario, std::size_t index);

RecoveryReport run_recovery(const SimScenario& scenario, std::size_t replications);

}  // namespace peerfx
