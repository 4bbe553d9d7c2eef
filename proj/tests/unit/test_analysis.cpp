#include <doctest.h>

#include "oracles.hpp"
#include "peerfx/analysis.hpp"
#include "peerfx/error.hpp"

using namespace peerfx;

namespace {

struct World {
  oracle::RandomNetwork net;
  FriendshipGraph g;
  AssignmentPlan plan;
  OutcomePanel panel;
  StudyData data() const { return {g, net.roster, plan, panel}; }
};

World make_world(std::uint64_t seed, double missing = 0.0) {
  Rng rng(seed);
  World w;
  w.net = oracle::random_network(rng, 8, 30, 45, 0.1);
  for (auto& r : w.net.roster) {
    for (std::size_t t = 1; t < kWaves; ++t) {
      const int prev = *r.aspiration[t - 1];
      const int step = static_cast<int>(rng.below(3)) - 1;
      r.aspiration[t] = std::clamp(prev + step, kMinAspiration, kMaxAspiration);
    }
    if (rng.bernoulli(missing)) r.aspiration[2].reset();
    r.covariate(Covariate::ClassSocial) = 1 + static_cast<double>(rng.below(4));
    r.covariate(Covariate::IncomeAsp) = 1000 + 20000 * rng.uniform();
    r.covariate(Covariate::Grades) = 6 + 4 * rng.uniform();
    r.covariate(Covariate::MotherEdu) = static_cast<double>(rng.below(6));
    r.covariate(Covariate::Grit) = 1 + static_cast<double>(rng.below(5));
    r.covariate(Covariate::Depression) = 1 + static_cast<double>(rng.below(5));
    r.covariate(Covariate::SelfEfficacy) = 1 + static_cast<double>(rng.below(5));
    r.covariate(Covariate::EduPref) = 1 + static_cast<double>(rng.below(5));
    r.covariate(Covariate::RiskPref) = rng.uniform();
    r.covariate(Covariate::State) = static_cast<double>(rng.below(2));
  }
  w.g = build_graph(w.net.edges, w.net.roster);
  w.plan = design_experiment(w.g, w.net.roster, {}, seed).plan;
  w.panel = build_outcomes(w.net.roster);
  return w;
}

}  // namespace

TEST_CASE("composite social effect") {
  CHECK(composite_social_effect(0.119, 0.026, 0.201) == doctest::Approx(0.145 / 0.799));
  CHECK(composite_social_effect(0.0, 0.0, 0.5) == 0.0);
  CHECK_THROWS_AS(composite_social_effect(0.1, 0.1, 1.0), Error);
}

TEST_CASE("moment codes") {
  for (Moment m : kMoments) CHECK(parse_moment(moment_code(m)) == m);
  CHECK(moment_earlier_wave(Moment::M21) == 1);
  CHECK(moment_later_wave(Moment::M20) == 2);
  CHECK_THROWS_AS(parse_moment("12"), Error);
}

TEST_CASE("outcome panel: change and direction per window") {
  std::vector<StudentRecord> roster(3);
  roster[0].aspiration = {3, 4, 4};
  roster[1].aspiration = {3, 3, 2};
  roster[2].aspiration = {5, std::nullopt, 5};
  const auto p = build_outcomes(roster);
  CHECK(*p.change_of(Moment::M10)[0] == 1);
  CHECK(*p.direction_of(Moment::M10)[0] == 1);
  CHECK(*p.change_of(Moment::M21)[0] == 0);
  CHECK(*p.direction_of(Moment::M20)[1] == -1);
  CHECK_FALSE(p.change_of(Moment::M10)[2].has_value());
  CHECK(*p.change_of(Moment::M20)[2] == 0);
  CHECK(p.missing[0] == 1);
  CHECK(p.missing[2] == 0);
  roster[0].aspiration[1] = 6;
  CHECK_THROWS_AS(build_outcomes(roster), Error);
}

TEST_CASE("eq1 and eq2 design columns match direct computation") {
  const auto w = make_world(31);
  const auto d = w.data();
  const auto dm1 = build_eq1_matrix(d, Moment::M10, ResponseKind::Change);
  REQUIRE(dm1.columns == std::vector<std::string>{kInterceptName, kTreatedColumn, kPeerMeanColumn, kTreatedFriendsColumn});
  const auto treated = w.plan.treated(w.g);
  for (Eigen::Index r = 0; r < dm1.x.rows(); ++r) {
    const NodeIndex i = dm1.rows[static_cast<std::size_t>(r)];
    CHECK(w.plan.eligible[i] == 1);
    CHECK(dm1.x(r, 1) == treated[i]);
    double sum = 0, cnt = 0, tsum = 0;
    for (const auto& nb : w.g.out_neighbors(i)) {
      sum += *w.net.roster[nb.node].aspiration[0];
      tsum += treated[nb.node];
      ++cnt;
    }
    CHECK(dm1.x(r, 2) == doctest::Approx(sum / cnt));
    CHECK(dm1.x(r, 3) == doctest::Approx(tsum / cnt));
    CHECK(dm1.y(r) == (*w.net.roster[i].aspiration[1] != *w.net.roster[i].aspiration[0]));
  }
  const auto dm2 = build_eq2_matrix(d, Moment::M21, ResponseKind::Direction);
  CHECK(dm2.columns[1] == kTreatedSchoolColumn);
  for (Eigen::Index r = 0; r < dm2.x.rows(); ++r) {
    const NodeIndex i = dm2.rows[static_cast<std::size_t>(r)];
    CHECK(w.plan.eligible[i] == 0);
    CHECK(dm2.x(r, 1) == w.plan.spillover[i]);
  }
  // Every candidate is either a row or counted as dropped.
  std::size_t eligible = 0;
  for (auto e : w.plan.eligible) eligible += e;
  CHECK(dm1.n_rows() + dm1.dropped_missing == eligible);
  CHECK(dm2.n_rows() + dm2.dropped_missing == w.g.node_count() - eligible);
}

TEST_CASE("listwise deletion of missing endline outcomes") {
  const auto w = make_world(32, 0.3);
  const auto d = w.data();
  const auto dm10 = build_eq1_matrix(d, Moment::M10, ResponseKind::Change);
  const auto dm21 = build_eq1_matrix(d, Moment::M21, ResponseKind::Change);
  CHECK(dm21.n_rows() < dm10.n_rows());
  CHECK(dm21.n_rows() + dm21.dropped_missing == dm10.n_rows() + dm10.dropped_missing);
}

TEST_CASE("full covariates and the mechanism column") {
  const auto w = make_world(33);
  const auto d = w.data();
  const auto cov = full_covariates(d);
  const std::vector<std::string> expected_prefix = {"asp_t0:high_school", "asp_t0:vocational", "asp_t0:masters",
                                                    "asp_t0:phd", "class_social:low", "class_social:lower_middle",
                                                    "class_social:upper_middle"};
  for (std::size_t k = 0; k < expected_prefix.size(); ++k) CHECK(cov.names[k] == expected_prefix[k]);
  CHECK(std::find(cov.names.begin(), cov.names.end(), "female") != cov.names.end());
  DesignOptions opt;
  opt.covariates = true;
  const auto dm = build_eq1_matrix(d, Moment::M10, ResponseKind::Change, opt);
  CHECK(dm.n_columns() > 4);

  const auto mech = build_mechanism_matrix(d, Moment::M10);
  REQUIRE(mech.column_index("change_t10").has_value());
  const auto share = friend_change_share(w.g, w.panel, Moment::M10);
  const auto col = *mech.column_index("change_t10");
  for (Eigen::Index r = 0; r < mech.x.rows(); ++r) {
    const NodeIndex i = mech.rows[static_cast<std::size_t>(r)];
    double s = 0, c = 0;
    for (const auto& nb : w.g.out_neighbors(i)) {
      s += *w.panel.change_of(Moment::M10)[nb.node];
      ++c;
    }
    CHECK(mech.x(r, static_cast<Eigen::Index>(col)) == doctest::Approx(s / c));
    CHECK(*share[i] == doctest::Approx(s / c));
  }
}

TEST_CASE("moment analysis wiring") {
  const auto w = make_world(34);
  const auto d = w.data();
  const auto a = run_moment_analysis(d, Moment::M10, ModelSpec::LogisticEq1);
  CHECK(a.se == CovarianceFlavor::HC3);
  REQUIRE(a.effects.size() == 4);
  CHECK(a.effects[0].term == kInterceptName);
  CHECK_FALSE(a.effects[0].effect.has_value());
  const auto ames = average_marginal_effects(a.fit, a.design, CovarianceFlavor::HC3);
  for (std::size_t k = 1; k < 4; ++k) {
    CHECK(*a.effects[k].effect == doctest::Approx(ames[k - 1].estimate));
    CHECK(*a.effects[k].effect_se == doctest::Approx(ames[k - 1].se));
  }
  REQUIRE(a.composite.has_value());
  CHECK(*a.composite == doctest::Approx(composite_social_effect(ames[0].estimate, ames[2].estimate, ames[1].estimate)));
  const auto table = format_table(a);
  CHECK(table.find("Num. obs.") != std::string::npos);
  CHECK(table.find("Composite") != std::string::npos);

  const auto m = run_moment_analysis(d, Moment::M10, ModelSpec::MultinomialEq1);
  CHECK(m.se == CovarianceFlavor::Model);
  CHECK(m.effects.size() == 8);
  CHECK_FALSE(m.composite.has_value());
  CHECK(default_covariance(ModelSpec::Mechanism) == CovarianceFlavor::HC1);

  const auto tab = direction_by_arm(d, Moment::M10);
  std::uint64_t total = 0;
  for (const auto& row : tab)
    for (auto v : row) total += v;
  std::uint64_t eligible = 0;
  for (auto e : w.plan.eligible) eligible += e;
  CHECK(total == eligible);
  CHECK(tab[0][0] + tab[0][1] + tab[0][2] > 0);
}
