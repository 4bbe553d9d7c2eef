#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "peerfx/error.hpp"
#include "peerfx/simulation.hpp"
#include "peerfx/stats.hpp"

using namespace peerfx;

namespace {

SimScenario small_scenario() {
  SimScenario sc;
  sc.n_schools = 6;
  sc.students_min = 40;
  sc.students_max = 60;
  sc.seed = 17;
  return sc;
}

}  // namespace

TEST_CASE("scenario parsing") {
  const auto sc = parse_scenario(KeyValues::parse("seed = 4\nbeta = 0.3\nnetwork = erdos_renyi\nattrition = 0.1\n"));
  CHECK(sc.seed == 4);
  CHECK(sc.beta == 0.3);
  CHECK(sc.network == NetworkModel::ErdosRenyi);
  const auto again = parse_scenario(KeyValues::parse(scenario_to_text(sc)));
  CHECK(again.beta == sc.beta);
  CHECK(again.attrition == sc.attrition);
  CHECK(again.network == sc.network);
  CHECK_THROWS_AS(parse_scenario(KeyValues::parse("beta = 0.1\n")), Error);
  CHECK_THROWS_AS(parse_scenario(KeyValues::parse("seed = 1\nbetta = 0.1\n")), Error);
  CHECK_THROWS_AS(parse_scenario(KeyValues::parse("seed = 1\nbeta = 1.0\n")), Error);
}

TEST_CASE("population shape") {
  auto sc = small_scenario();
  const auto pop = generate_population(sc, 1);
  CHECK(pop.graph.school_count() == 6);
  for (SchoolIndex s = 0; s < 6; ++s) {
    CHECK(pop.graph.members(s).size() >= 40);
    CHECK(pop.graph.members(s).size() <= 60);
  }
  for (NodeIndex i = 0; i < pop.graph.node_count(); ++i) {
    CHECK(pop.graph.out_neighbors(i).size() == sc.out_degree);
    for (const auto& nb : pop.graph.out_neighbors(i)) {
      CHECK(pop.graph.school_of(nb.node) == pop.graph.school_of(i));
      CHECK(nb.weight >= sc.weight_min);
      CHECK(nb.weight <= sc.weight_max);
    }
    CHECK(pop.roster[i].aspiration[0].has_value());
    CHECK_FALSE(pop.roster[i].aspiration[1].has_value());
  }
  sc.out_degree = 45;
  CHECK_THROWS_AS(generate_population(sc, 1), Error);
}

TEST_CASE("replications are reproducible and distinct") {
  const auto sc = small_scenario();
  const auto a = simulate_replication_data(sc, 3);
  const auto b = simulate_replication_data(sc, 3);
  const auto c = simulate_replication_data(sc, 4);
  CHECK(a.outcomes.roster == b.outcomes.roster);
  CHECK(a.design.plan.eligible == b.design.plan.eligible);
  CHECK(a.outcomes.roster != c.outcomes.roster);
}

TEST_CASE("outcome moves are one level and stay on the scale") {
  auto sc = small_scenario();
  sc.alpha = 1.0;
  const auto d = simulate_replication_data(sc, 0);
  for (const auto& r : d.outcomes.roster) {
    for (std::size_t t = 1; t < kWaves; ++t) {
      REQUIRE(r.aspiration[t].has_value());
      CHECK(std::abs(*r.aspiration[t] - *r.aspiration[t - 1]) <= 1);
      CHECK(*r.aspiration[t] >= kMinAspiration);
      CHECK(*r.aspiration[t] <= kMaxAspiration);
    }
  }
}

TEST_CASE("index follows the structural equation") {
  auto sc = small_scenario();
  sc.alpha = -0.2;
  sc.gamma = 0.7;
  sc.delta = 0.3;
  const auto d = simulate_replication_data(sc, 0);
  const auto treated = d.design.plan.treated(d.population.graph);
  const auto frac = treated_fraction(d.population.graph, treated);
  std::vector<double> base;
  for (const auto& r : d.population.roster) base.push_back(*r.aspiration[0]);
  const auto peer = standardized_peer_mean(d.population.graph, base);
  for (NodeIndex i = 0; i < d.population.graph.node_count(); ++i) {
    const double expect = sc.alpha + sc.gamma * treated[i] + sc.delta * frac[i].value_or(0.0) +
                          sc.beta * peer[i].value_or(0.0);
    CHECK(d.outcomes.index[i] == doctest::Approx(expect));
  }
}

TEST_CASE("recovery is identical across thread counts") {
  auto sc = small_scenario();
  sc.replications = 6;
  const auto one = run_recovery(sc, 6);
  sc.threads = 3;
  const auto three = run_recovery(sc, 6);
  REQUIRE(one.parameters.size() == three.parameters.size());
  for (std::size_t k = 0; k < one.parameters.size(); ++k) {
    CHECK(one.parameters[k].mean == three.parameters[k].mean);
    CHECK(one.parameters[k].coverage == three.parameters[k].coverage);
  }
  CHECK(one.rejection_rate == three.rejection_rate);
  const auto single = run_recovery(sc, 1);
  CHECK_FALSE(single.mc_se_defined);
  CHECK_FALSE(single.parameters[0].mc_se.has_value());
}

TEST_CASE("attrition diagnostic separates arm-dependent from independent non-response") {
  auto sc = small_scenario();
  sc.n_schools = 10;
  sc.attrition = 0.05;
  sc.attrition_treated = 0.4;
  const auto d = simulate_replication_data(sc, 0);
  const StudyData data{d.population.graph, d.outcomes.roster, d.design.plan, d.outcomes.panel};
  const auto rep = attrition_mipo(data);
  REQUIRE(rep.on_treatment.has_value());
  CHECK(rep.mipo_violated);
  CHECK(rep.on_treatment->rate_z1 < rep.on_treatment->rate_z0);
  std::uint64_t counted = 0;
  for (const auto& b : rep.histogram) counted += b.count;
  if (!rep.covariate_model_error) CHECK(counted == rep.n_students);

  sc.attrition_treated.reset();
  sc.attrition = 0.0;
  const auto full = simulate_replication_data(sc, 0);
  const StudyData fd{full.population.graph, full.outcomes.roster, full.design.plan, full.outcomes.panel};
  const auto none = attrition_mipo(fd);
  CHECK(none.attrition_rate == 0.0);
  CHECK_FALSE(none.mipo_violated);
}

TEST_CASE("balance compares treated students with eligible controls") {
  const auto d = simulate_replication_data(small_scenario(), 0);
  const StudyData data{d.population.graph, d.outcomes.roster, d.design.plan, d.outcomes.panel};
  const auto rows = covariate_balance(data);
  REQUIRE_FALSE(rows.empty());
  const auto treated = d.design.plan.treated(d.population.graph);
  std::size_t nt = 0, nc = 0;
  for (NodeIndex i = 0; i < treated.size(); ++i) {
    nt += treated[i];
    nc += d.design.plan.eligible[i] && !treated[i];
  }
  std::set<std::string> names;
  for (const auto& r : rows) {
    names.insert(r.covariate);
    CHECK(r.n_treated <= nt);
    CHECK(r.n_control <= nc);
    CHECK(r.unbalanced == (r.p_value < kBalanceLevel));
  }
  CHECK(names.count("grades"));
  for (const auto& r : rows)
    if (r.covariate == "grades") CHECK(r.method == BalanceMethod::WelchT);
    else if (r.covariate == "grit") CHECK(r.method == BalanceMethod::Wilcoxon);
}
