#include "peerfx/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "peerfx/error.hpp"
#include "peerfx/glm.hpp"
#include "peerfx/rng.hpp"

namespace peerfx {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidInput, "scenario: " + what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void SimScenario::validate() const {
  require(n_schools >= 2, "n_schools must be at least 2");
  require(students_min >= 3 && students_min <= students_max, "need 3 <= students_min <= students_max");
  require(is_probability(edge_probability), "edge_probability must lie in [0, 1]");
  require(weight_min >= 1 && weight_min <= weight_max, "need 1 <= weight_min <= weight_max");
  double total = 0.0;
  for (double w : baseline_law) {
    require(w >= 0.0 && std::isfinite(w), "baseline_law weights must be nonnegative");
    total += w;
  }
  require(total > 0.0, "baseline_law must have positive mass");
  require(is_probability(female_probability), "female_probability must lie in [0, 1]");
  require(beta > -1.0 && beta < 1.0, "beta must lie in (-1, 1)");
  for (double v : {alpha, gamma, delta, school_effect, up_shift}) {
    require(std::isfinite(v), "coefficients must be finite");
  }
  require(is_probability(up_probability), "up_probability must lie in [0, 1]");
  require(is_probability(selection_proportion), "selection_proportion must lie in [0, 1]");
  require(is_probability(attrition), "attrition must lie in [0, 1]");
  require(!attrition_treated || is_probability(*attrition_treated),
          "attrition_treated must lie in [0, 1]");
  require(replications >= 1, "replications must be at least 1");
  require(threads >= 1, "threads must be at least 1");
  require(test_alpha > 0.0 && test_alpha < 1.0, "test_alpha must lie in (0, 1)");
}

namespace {

const std::vector<std::string> kScenarioKeys = {
    "n_schools",    "students_min",  "students_max",      "network",
    "edge_probability", "out_degree", "weight_min",       "weight_max",
    "baseline_law", "female_probability", "alpha",        "beta",
    "gamma",        "delta",         "school_effect",     "error",
    "outcome",      "up_probability", "up_shift",         "selection_proportion",
    "attrition",    "attrition_treated", "seed",          "replications",
    "threads",      "test_alpha",
};

}  // namespace

SimScenario parse_scenario(const KeyValues& kv) {
  if (const auto unknown = kv.unknown_keys(kScenarioKeys); !unknown.empty()) {
    throw Error(ErrorKind::Parse, "scenario: unknown key '" + unknown.front() + "'");
  }
  SimScenario s;
  const auto seed = kv.get_uint("seed");
  if (!seed) throw Error(ErrorKind::Parse, "scenario: seed is required");
  s.seed = *seed;
  auto size = [&](const char* key, std::size_t& out) {
    if (auto v = kv.get_uint(key)) out = static_cast<std::size_t>(*v);
  };
  auto real = [&](const char* key, double& out) {
    if (auto v = kv.get_double(key)) out = *v;
  };
  size("n_schools", s.n_schools);
  size("students_min", s.students_min);
  size("students_max", s.students_max);
  size("out_degree", s.out_degree);
  size("replications", s.replications);
  size("threads", s.threads);
  if (auto v = kv.get("network")) {
    if (*v == "erdos_renyi") {
      s.network = NetworkModel::ErdosRenyi;
    } else if (*v == "fixed_out_degree") {
      s.network = NetworkModel::FixedOutDegree;
    } else {
      throw Error(ErrorKind::Parse, "scenario: unknown network '" + *v + "'");
    }
  }
  if (auto v = kv.get("error")) {
    if (*v == "logistic") {
      s.error = ErrorLaw::Logistic;
    } else if (*v == "normal") {
      s.error = ErrorLaw::Normal;
    } else {
      throw Error(ErrorKind::Parse, "scenario: unknown error law '" + *v + "'");
    }
  }
  if (auto v = kv.get("outcome")) {
    if (*v == "binary") {
      s.outcome = OutcomeLaw::Binary;
    } else if (*v == "multinomial") {
      s.outcome = OutcomeLaw::Multinomial;
    } else {
      throw Error(ErrorKind::Parse, "scenario: unknown outcome law '" + *v + "'");
    }
  }
  real("edge_probability", s.edge_probability);
  if (auto v = kv.get_int("weight_min")) s.weight_min = static_cast<int>(*v);
  if (auto v = kv.get_int("weight_max")) s.weight_max = static_cast<int>(*v);
  if (auto v = kv.get_doubles("baseline_law")) {
    if (v->size() != 5) throw Error(ErrorKind::Parse, "scenario: baseline_law needs 5 weights");
    std::copy(v->begin(), v->end(), s.baseline_law.begin());
  }
  real("female_probability", s.female_probability);
  real("alpha", s.alpha);
  real("beta", s.beta);
  real("gamma", s.gamma);
  real("delta", s.delta);
  real("school_effect", s.school_effect);
  real("up_probability", s.up_probability);
  real("up_shift", s.up_shift);
  real("selection_proportion", s.selection_proportion);
  real("attrition", s.attrition);
  if (auto v = kv.get_double("attrition_treated")) s.attrition_treated = *v;
  real("test_alpha", s.test_alpha);
  s.validate();
  return s;
}

std::string scenario_to_text(const SimScenario& s) {
  std::ostringstream os;
  os.precision(17);
  os << "n_schools=" << s.n_schools << "\nstudents_min=" << s.students_min
     << "\nstudents_max=" << s.students_max << "\nnetwork="
     << (s.network == NetworkModel::ErdosRenyi ? "erdos_renyi" : "fixed_out_degree")
     << "\nedge_probability=" << s.edge_probability << "\nout_degree=" << s.out_degree
     << "\nweight_min=" << s.weight_min << "\nweight_max=" << s.weight_max << "\nbaseline_law=";
  for (std::size_t i = 0; i < s.baseline_law.size(); ++i) {
    os << (i ? "," : "") << s.baseline_law[i];
  }
  os << "\nfemale_probability=" << s.female_probability << "\nalpha=" << s.alpha
     << "\nbeta=" << s.beta << "\ngamma=" << s.gamma << "\ndelta=" << s.delta
     << "\nschool_effect=" << s.school_effect
     << "\nerror=" << (s.error == ErrorLaw::Logistic ? "logistic" : "normal")
     << "\noutcome=" << (s.outcome == OutcomeLaw::Binary ? "binary" : "multinomial")
     << "\nup_probability=" << s.up_probability << "\nup_shift=" << s.up_shift
     << "\nselection_proportion=" << s.selection_proportion << "\nattrition=" << s.attrition;
  if (s.attrition_treated) os << "\nattrition_treated=" << *s.attrition_treated;
  os << "\nseed=" << s.seed << "\nreplications=" << s.replications << "\nthreads=" << s.threads
     << "\ntest_alpha=" << s.test_alpha << '\n';
  return os.str();
}

namespace {

int draw_categorical(Rng& rng, const std::array<double, 5>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (u < weights[k]) return static_cast<int>(k) + 1;
    u -= weights[k];
  }
  for (std::size_t k = weights.size(); k-- > 0;) {
    if (weights[k] > 0.0) return static_cast<int>(k) + 1;
  }
  return 1;
}

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

std::string school_name(std::size_t s) {
  std::string n = std::to_string(s + 1);
  return "S" + std::string(n.size() < 2 ? 2 - n.size() : 0, '0') + n;
}

std::string student_id(const std::string& school, std::size_t k) {
  std::string n = std::to_string(k + 1);
  return school + "-" + std::string(n.size() < 3 ? 3 - n.size() : 0, '0') + n;
}

void fill_covariates(StudentRecord& rec, Rng& rng, double state) {
  rec.covariate(Covariate::ClassSocial) = static_cast<double>(1 + rng.below(4));
  rec.covariate(Covariate::IncomeAsp) =
      std::round(clamp(std::exp(9.6 + 0.6 * rng.normal()), 1000.0, 100000.0));
  rec.covariate(Covariate::Grades) = std::round(clamp(8.0 + rng.normal(), 5.0, 10.0) * 10.0) / 10.0;
  rec.covariate(Covariate::MotherEdu) = static_cast<double>(1 + rng.below(6));
  rec.covariate(Covariate::Grit) = static_cast<double>(1 + rng.below(5));
  rec.covariate(Covariate::Depression) = static_cast<double>(rng.below(10));
  rec.covariate(Covariate::SelfEfficacy) = static_cast<double>(1 + rng.below(5));
  rec.covariate(Covariate::EduPref) = static_cast<double>(1 + rng.below(5));
  rec.covariate(Covariate::RiskPref) = static_cast<double>(rng.below(11));
  rec.covariate(Covariate::State) = state;
}

}  // namespace

Population generate_population(const SimScenario& sc, std::uint64_t seed) {
  sc.validate();
  if (sc.network == NetworkModel::FixedOutDegree && sc.out_degree >= sc.students_min) {
    throw Error(ErrorKind::InvalidInput, "scenario: out_degree must be below every school size");
  }
  Population pop;
  for (std::size_t s = 0; s < sc.n_schools; ++s) {
    Rng rng = Rng::stream(seed, s);
    const std::string name = school_name(s);
    const std::size_t n =
        sc.students_min + static_cast<std::size_t>(rng.below(sc.students_max - sc.students_min + 1));
    const double state = static_cast<double>(s % 2);
    const std::size_t first = pop.roster.size();
    for (std::size_t k = 0; k < n; ++k) {
      StudentRecord rec;
      rec.id = student_id(name, k);
      rec.school = name;
      rec.gender = rng.bernoulli(sc.female_probability) ? "F" : "M";
      rec.aspiration[0] = draw_categorical(rng, sc.baseline_law);
      fill_covariates(rec, rng, state);
      pop.roster.push_back(std::move(rec));
    }
    auto add_edge = [&](std::size_t i, std::size_t j) {
      const int w = sc.weight_min + static_cast<int>(rng.below(
                                        static_cast<std::uint64_t>(sc.weight_max - sc.weight_min + 1)));
      pop.edges.push_back({pop.roster[first + i].id, pop.roster[first + j].id, static_cast<double>(w)});
    };
    if (sc.network == NetworkModel::ErdosRenyi) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i != j && rng.bernoulli(sc.edge_probability)) add_edge(i, j);
        }
      }
    } else {
      std::vector<std::size_t> others(n - 1);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0, k = 0; j < n; ++j) {
          if (j != i) others[k++] = j;
        }
        // Partial Fisher-Yates: first out_degree entries are a uniform subset.
        for (std::size_t k = 0; k < sc.out_degree; ++k) {
          const auto r = k + static_cast<std::size_t>(rng.below(others.size() - k));
          std::swap(others[k], others[r]);
        }
        std::vector<std::size_t> pick(others.begin(), others.begin() + static_cast<long>(sc.out_degree));
        std::sort(pick.begin(), pick.end());
        for (std::size_t j : pick) add_edge(i, j);
      }
    }
  }
  pop.graph = build_graph(pop.edges, pop.roster);
  return pop;
}

namespace {

double noise(Rng& rng, ErrorLaw law) { return law == ErrorLaw::Logistic ? rng.logistic() : rng.normal(); }

// One step from `level`: dir in {-1, 0, +1}, pointed inward at scale ends.
int step(int level, int dir) {
  if (dir > 0 && level == kMaxAspiration) dir = -1;
  if (dir < 0 && level == kMinAspiration) dir = +1;
  return level + dir;
}

int draw_direction(const SimScenario& sc, Rng& rng, double index) {
  if (sc.outcome == OutcomeLaw::Binary) {
    if (index + noise(rng, sc.error) <= 0.0) return 0;
    return rng.bernoulli(sc.up_probability) ? +1 : -1;
  }
  const double stay = rng.gumbel();
  const double down = index - sc.up_shift / 2.0 + rng.gumbel();
  const double up = index + sc.up_shift / 2.0 + rng.gumbel();
  if (stay >= down && stay >= up) return 0;
  return up > down ? +1 : -1;
}

}  // namespace

SimOutcomes generate_outcomes(const SimScenario& sc, const Population& pop,
                              const AssignmentPlan& plan, std::uint64_t seed) {
  const FriendshipGraph& g = pop.graph;
  const std::size_t n = g.node_count();
  if (pop.roster.size() != n || plan.eligible.size() != n || plan.spillover.size() != n) {
    throw Error(ErrorKind::InvalidInput, "population and plan sizes disagree");
  }
  std::vector<std::optional<double>> base(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (pop.roster[i].aspiration[0]) base[i] = *pop.roster[i].aspiration[0];
  }
  const auto peer = standardized_peer_mean(g, base, MissingFriendPolicy::Skip);
  const auto treated = plan.treated(g);
  const auto frac = treated_fraction(g, treated);

  SimOutcomes out;
  out.roster = pop.roster;
  out.index.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.index[i] = sc.alpha + sc.beta * peer[i].value_or(0.0) + sc.gamma * treated[i] +
                   sc.delta * frac[i].value_or(0.0) + sc.school_effect * plan.spillover[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, i);
    auto& rec = out.roster[i];
    int level = rec.aspiration[0].value_or(3);
    for (std::size_t t = 1; t < kWaves; ++t) {
      level = step(level, draw_direction(sc, rng, out.index[i]));
      rec.aspiration[t] = level;
    }
    const double drop = treated[i] && sc.attrition_treated ? *sc.attrition_treated : sc.attrition;
    if (rng.bernoulli(drop)) rec.aspiration[2].reset();
    if (!rec.aspiration[0]) rec.aspiration[1].reset(), rec.aspiration[2].reset();
  }
  out.panel = build_outcomes(out.roster);
  return out;
}

namespace {

struct Target {
  const char* model;
  const char* term;
  double SimScenario::*truth;
};

const std::array<Target, 8> kTargets = {{
    {"eq1", kInterceptName, &SimScenario::alpha},
    {"eq1", kPeerMeanColumn, &SimScenario::beta},
    {"eq1", kTreatedColumn, &SimScenario::gamma},
    {"eq1", kTreatedFriendsColumn, &SimScenario::delta},
    {"eq2", kInterceptName, &SimScenario::alpha},
    {"eq2", kPeerMeanColumn, &SimScenario::beta},
    {"eq2", kTreatedSchoolColumn, &SimScenario::school_effect},
    {"eq2", kTreatedFriendsColumn, &SimScenario::delta},
}};

constexpr double kZ975 = 1.959963984540054;

}  // namespace

ReplicationData simulate_replication_data(const SimScenario& sc, std::size_t index) {
  const std::uint64_t rep_seed = hash_combine(sc.seed, index);
  ReplicationData d{generate_population(sc, hash_combine(rep_seed, 1)), {}, {}};
  d.design = design_experiment(d.population.graph, d.population.roster, ProportionMap{},
                               hash_combine(rep_seed, 2), sc.selection_proportion);
  d.outcomes = generate_outcomes(sc, d.population, d.design.plan, hash_combine(rep_seed, 3));
  return d;
}

ReplicationResult run_replication(const SimScenario& sc, std::size_t index) {
  ReplicationResult res;
  try {
    const ReplicationData d = simulate_replication_data(sc, index);
    const Population& pop = d.population;
    const DesignResult& design = d.design;
    const SimOutcomes& sim = d.outcomes;
    res.n_students = pop.graph.node_count();
    res.n_eligible = static_cast<std::size_t>(
        std::count(design.plan.eligible.begin(), design.plan.eligible.end(), std::uint8_t{1}));

    const StudyData data{pop.graph, sim.roster, design.plan, sim.panel};
    AnalysisOptions opts;
    opts.design.standardize_peer_mean = true;
    opts.se = CovarianceFlavor::HC3;
    const MomentAnalysis eq1 = run_moment_analysis(data, Moment::M10, ModelSpec::LogisticEq1, opts);
    const MomentAnalysis eq2 = run_moment_analysis(data, Moment::M10, ModelSpec::LogisticEq2, opts);

    for (const auto& t : kTargets) {
      const MomentAnalysis& a = std::string(t.model) == "eq1" ? eq1 : eq2;
      const auto it = std::find_if(a.effects.begin(), a.effects.end(),
                                   [&](const EffectRow& r) { return r.term == t.term; });
      if (it == a.effects.end()) throw Error(ErrorKind::Degenerate, std::string("missing term ") + t.term);
      res.estimates.push_back(it->estimate);
      res.ses.push_back(it->se_hc3);
      if (std::string(t.term) == kTreatedColumn) {
        res.treated_ame = it->effect.value_or(0.0);
        res.treated_ame_p = it->p_value;
      }
      if (std::string(t.term) == kTreatedSchoolColumn) res.spill_ame_p = it->p_value;
    }
    res.ok = true;
  } catch (const Error& e) {
    res.ok = false;
    res.failure = e.what();
  }
  return res;
}

RecoveryReport run_recovery(const SimScenario& sc, std::size_t replications) {
  sc.validate();
  if (replications < 1) throw Error(ErrorKind::InvalidInput, "replications must be at least 1");
  std::vector<ReplicationResult> results(replications);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t r; (r = next.fetch_add(1)) < replications;) results[r] = run_replication(sc, r);
  };
  const std::size_t nthreads = std::min(sc.threads, replications);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  RecoveryReport rep;
  rep.replications = replications;
  rep.test_alpha = sc.test_alpha;
  std::vector<const ReplicationResult*> ok;
  for (const auto& r : results) {
    if (r.ok) {
      ok.push_back(&r);
    } else {
      ++rep.failed;
      rep.failures.push_back(r.failure);
    }
  }
  const double m = static_cast<double>(ok.size());
  rep.mc_se_defined = ok.size() >= 2;
  for (std::size_t k = 0; k < kTargets.size(); ++k) {
    ParameterRecovery p;
    p.model = kTargets[k].model;
    p.term = kTargets[k].term;
    p.truth = sc.*kTargets[k].truth;
    p.n = ok.size();
    if (ok.empty()) {
      rep.parameters.push_back(p);
      continue;
    }
    double sum = 0.0, covered = 0.0;
    for (const auto* r : ok) {
      sum += r->estimates[k];
      covered += std::abs(r->estimates[k] - p.truth) <= kZ975 * r->ses[k] ? 1.0 : 0.0;
    }
    p.mean = sum / m;
    p.bias = p.mean - p.truth;
    p.coverage = covered / m;
    if (rep.mc_se_defined) {
      double ss = 0.0;
      for (const auto* r : ok) ss += (r->estimates[k] - p.mean) * (r->estimates[k] - p.mean);
      p.mc_se = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
    }
    rep.parameters.push_back(p);
  }
  if (!ok.empty()) {
    double rej = 0.0, pos = 0.0, spill = 0.0, ns = 0.0, ne = 0.0;
    for (const auto* r : ok) {
      rej += r->treated_ame_p < sc.test_alpha ? 1.0 : 0.0;
      pos += (r->treated_ame > 0.0 && r->treated_ame_p < sc.test_alpha) ? 1.0 : 0.0;
      spill += r->spill_ame_p < sc.test_alpha ? 1.0 : 0.0;
      ns += static_cast<double>(r->n_students);
      ne += static_cast<double>(r->n_eligible);
    }
    rep.rejection_rate = rej / m;
    rep.positive_rate = pos / m;
    rep.spill_rejection_rate = spill / m;
    rep.mean_students = ns / m;
    rep.mean_eligible = ne / m;
  }
  return rep;
}

}  // namespace peerfx
