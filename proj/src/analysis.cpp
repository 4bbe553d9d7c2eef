#include "peerfx/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "peerfx/error.hpp"

namespace peerfx {

Moment parse_moment(const std::string& code) {
  if (code == "10") return Moment::M10;
  if (code == "21") return Moment::M21;
  if (code == "20") return Moment::M20;
  throw Error(ErrorKind::InvalidInput, "invalid moment '" + code + "' (expected 10, 21 or 20)");
}

std::string moment_code(Moment m) {
  switch (m) {
    case Moment::M10: return "10";
    case Moment::M21: return "21";
    case Moment::M20: return "20";
  }
  return "?";
}

std::size_t moment_later_wave(Moment m) { return m == Moment::M10 ? 1 : 2; }
std::size_t moment_earlier_wave(Moment m) { return m == Moment::M21 ? 1 : 0; }

OutcomePanel build_outcomes(std::span<const StudentRecord> roster) {
  OutcomePanel panel;
  panel.n_students = roster.size();
  panel.baseline.resize(roster.size());
  for (auto& v : panel.change) v.assign(roster.size(), std::nullopt);
  for (auto& v : panel.direction) v.assign(roster.size(), std::nullopt);

  for (std::size_t i = 0; i < roster.size(); ++i) {
    const auto& rec = roster[i];
    for (std::size_t t = 0; t < kWaves; ++t) {
      const auto& a = rec.aspiration[t];
      if (a && (*a < kMinAspiration || *a > kMaxAspiration)) {
        throw Error(ErrorKind::InvalidInput, "student " + rec.id + ": invalid aspiration code " +
                                                 std::to_string(*a) + " at wave " +
                                                 std::to_string(t));
      }
    }
    panel.baseline[i] = rec.aspiration[0];
    for (Moment m : kMoments) {
      const auto mi = static_cast<std::size_t>(m);
      const auto& later = rec.aspiration[moment_later_wave(m)];
      const auto& earlier = rec.aspiration[moment_earlier_wave(m)];
      if (!later || !earlier) {
        ++panel.missing[mi];
        continue;
      }
      const int d = (*later > *earlier) - (*later < *earlier);
      panel.direction[mi][i] = d;
      panel.change[mi][i] = d != 0 ? 1 : 0;
    }
  }
  return panel;
}

namespace {

using Column = std::vector<std::optional<double>>;

struct ColumnSet : NamedColumns {
  void add(std::string name, Column v) {
    names.push_back(std::move(name));
    values.push_back(std::move(v));
  }
};

Column to_column(std::span<const std::uint8_t> v) {
  Column c(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) c[i] = v[i];
  return c;
}

void check_sizes(const StudyData& data) {
  const std::size_t n = data.graph.node_count();
  if (data.roster.size() != n || data.panel.n_students != n || data.plan.eligible.size() != n ||
      data.plan.spillover.size() != n || data.plan.school_arm.size() != data.graph.school_count()) {
    throw Error(ErrorKind::InvalidInput, "roster, panel, plan and graph sizes disagree");
  }
}

Column baseline_peer_mean(const StudyData& data, bool standardize) {
  Column base(data.panel.baseline.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (data.panel.baseline[i]) base[i] = *data.panel.baseline[i];
  }
  return standardize ? standardized_peer_mean(data.graph, base, MissingFriendPolicy::Skip)
                     : peer_mean(data.graph, base, MissingFriendPolicy::Skip);
}

}  // namespace

NamedColumns full_covariates(const StudyData& data) {
  ColumnSet cols;
  const std::size_t n = data.roster.size();
  static constexpr std::array<std::pair<int, const char*>, 4> kAspLevels = {{
      {1, "asp_t0:high_school"}, {2, "asp_t0:vocational"}, {4, "asp_t0:masters"}, {5, "asp_t0:phd"},
  }};
  for (const auto& [code, name] : kAspLevels) {
    Column c(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (data.panel.baseline[i]) c[i] = *data.panel.baseline[i] == code ? 1.0 : 0.0;
    }
    cols.add(name, std::move(c));
  }
  static constexpr std::array<std::pair<int, const char*>, 3> kClassLevels = {{
      {1, "class_social:low"}, {2, "class_social:lower_middle"}, {3, "class_social:upper_middle"},
  }};
  for (const auto& [code, name] : kClassLevels) {
    Column c(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = data.roster[i].covariate(Covariate::ClassSocial);
      if (v) c[i] = std::lround(*v) == code ? 1.0 : 0.0;
    }
    cols.add(name, std::move(c));
  }
  for (Covariate cv : {Covariate::Grades, Covariate::EduPref, Covariate::RiskPref,
                       Covariate::Depression, Covariate::SelfEfficacy, Covariate::Grit}) {
    Column c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = data.roster[i].covariate(cv);
    cols.add(std::string(kCovariateNames[static_cast<std::size_t>(cv)]), std::move(c));
  }
  const auto metrics = node_metrics(data.graph);
  Column trans(n), female(n);
  for (std::size_t i = 0; i < n; ++i) {
    trans[i] = metrics[i].local_transitivity.value_or(0.0);
    female[i] = data.roster[i].gender == "F" ? 1.0 : 0.0;
  }
  cols.add("transitivity", std::move(trans));
  cols.add("female", std::move(female));
  for (Covariate cv : {Covariate::MotherEdu, Covariate::State}) {
    Column c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = data.roster[i].covariate(cv);
    cols.add(std::string(kCovariateNames[static_cast<std::size_t>(cv)]), std::move(c));
  }
  return cols;
}

namespace {

void add_covariates(const StudyData& data, ColumnSet& cols) {
  NamedColumns cov = full_covariates(data);
  for (std::size_t j = 0; j < cov.names.size(); ++j) {
    cols.add(std::move(cov.names[j]), std::move(cov.values[j]));
  }
}

// Rows restricted to `in_sample`, listwise deletion over response and
// columns. Covariate dummies (index >= first_optional) that vanish on the
// sample are dropped.
DesignMatrix assemble(const ColumnSet& cols, const std::vector<std::optional<int>>& response,
                      std::span<const std::uint8_t> in_sample, std::size_t first_optional,
                      const char* what) {
  const std::size_t n = in_sample.size();
  std::vector<NodeIndex> rows;
  std::size_t candidates = 0, dropped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_sample[i]) continue;
    ++candidates;
    bool ok = response[i].has_value();
    for (const auto& c : cols.values) ok = ok && c[i].has_value();
    if (ok) {
      rows.push_back(i);
    } else {
      ++dropped;
    }
  }
  if (candidates == 0) throw Error(ErrorKind::EmptySample, std::string(what) + ": empty sample");
  if (rows.empty()) {
    throw Error(ErrorKind::EmptySample,
                std::string(what) + ": no complete rows after listwise deletion");
  }

  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < cols.names.size(); ++j) {
    if (j >= first_optional) {
      bool any = false;
      for (NodeIndex r : rows) any = any || *cols.values[j][r] != 0.0;
      if (!any) continue;
    }
    keep.push_back(j);
  }

  DesignMatrix dm;
  dm.columns.push_back(kInterceptName);
  for (std::size_t j : keep) dm.columns.push_back(cols.names[j]);
  const auto nr = static_cast<Eigen::Index>(rows.size());
  dm.x.resize(nr, static_cast<Eigen::Index>(dm.columns.size()));
  dm.y.resize(nr);
  for (Eigen::Index r = 0; r < nr; ++r) {
    const NodeIndex i = rows[static_cast<std::size_t>(r)];
    dm.x(r, 0) = 1.0;
    for (std::size_t k = 0; k < keep.size(); ++k) {
      dm.x(r, static_cast<Eigen::Index>(k + 1)) = *cols.values[keep[k]][i];
    }
    dm.y(r) = *response[i];
  }
  dm.rows = std::move(rows);
  dm.dropped_missing = dropped;
  dm.validate();
  return dm;
}

const std::vector<std::optional<int>>& response_of(const OutcomePanel& p, Moment m,
                                                   ResponseKind kind) {
  return kind == ResponseKind::Change ? p.change_of(m) : p.direction_of(m);
}

ColumnSet core_columns(const StudyData& data, const char* treat_name,
                       std::span<const std::uint8_t> treat_flag, const DesignOptions& options) {
  const auto treated = data.plan.treated(data.graph);
  ColumnSet cols;
  cols.add(treat_name, to_column(treat_flag));
  cols.add(kPeerMeanColumn, baseline_peer_mean(data, options.standardize_peer_mean));
  cols.add(kTreatedFriendsColumn, treated_fraction(data.graph, treated));
  return cols;
}

}  // namespace

DesignMatrix build_eq1_matrix(const StudyData& data, Moment moment, ResponseKind response,
                              const DesignOptions& options) {
  check_sizes(data);
  const auto treated = data.plan.treated(data.graph);
  ColumnSet cols = core_columns(data, kTreatedColumn, treated, options);
  const std::size_t first_optional = cols.names.size();
  if (options.covariates) add_covariates(data, cols);
  return assemble(cols, response_of(data.panel, moment, response), data.plan.eligible,
                  first_optional, "eq1");
}

DesignMatrix build_eq2_matrix(const StudyData& data, Moment moment, ResponseKind response,
                              const DesignOptions& options) {
  check_sizes(data);
  ColumnSet cols = core_columns(data, kTreatedSchoolColumn, data.plan.spillover, options);
  const std::size_t first_optional = cols.names.size();
  if (options.covariates) add_covariates(data, cols);
  std::vector<std::uint8_t> sample(data.plan.eligible.size());
  for (std::size_t i = 0; i < sample.size(); ++i) sample[i] = data.plan.eligible[i] ? 0 : 1;
  return assemble(cols, response_of(data.panel, moment, response), sample, first_optional, "eq2");
}

std::vector<std::optional<double>> friend_change_share(const FriendshipGraph& g,
                                                       const OutcomePanel& panel, Moment moment) {
  const auto& change = panel.change_of(moment);
  Column c(change.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (change[i]) c[i] = *change[i];
  }
  return peer_mean(g, c, MissingFriendPolicy::Skip);
}

DesignMatrix build_mechanism_matrix(const StudyData& data, Moment moment,
                                    const DesignOptions& options) {
  check_sizes(data);
  const auto treated = data.plan.treated(data.graph);
  ColumnSet cols = core_columns(data, kTreatedColumn, treated, options);
  cols.add("change_t" + moment_code(moment), friend_change_share(data.graph, data.panel, moment));
  const std::size_t first_optional = cols.names.size();
  if (options.covariates) add_covariates(data, cols);
  return assemble(cols, data.panel.change_of(moment), data.plan.eligible, first_optional,
                  "mechanism");
}

double composite_social_effect(double gamma, double delta, double beta) {
  if (beta == 1.0) throw Error(ErrorKind::InvalidInput, "composite effect undefined for beta = 1");
  return (gamma + delta) / (1.0 - beta);
}

ModelSpec parse_model_spec(const std::string& s) {
  if (s == "eq1") return ModelSpec::LogisticEq1;
  if (s == "eq2") return ModelSpec::LogisticEq2;
  if (s == "multinomial") return ModelSpec::MultinomialEq1;
  if (s == "mechanism") return ModelSpec::Mechanism;
  throw Error(ErrorKind::InvalidInput,
              "unknown model '" + s + "' (expected eq1, eq2, multinomial or mechanism)");
}

std::string model_spec_name(ModelSpec m) {
  switch (m) {
    case ModelSpec::LogisticEq1: return "eq1";
    case ModelSpec::LogisticEq2: return "eq2";
    case ModelSpec::MultinomialEq1: return "multinomial";
    case ModelSpec::Mechanism: return "mechanism";
  }
  return "?";
}

CovarianceFlavor default_covariance(ModelSpec m) {
  switch (m) {
    case ModelSpec::MultinomialEq1: return CovarianceFlavor::Model;
    case ModelSpec::Mechanism: return CovarianceFlavor::HC1;
    default: return CovarianceFlavor::HC3;
  }
}

MomentAnalysis run_moment_analysis(const StudyData& data, Moment moment, ModelSpec model,
                                   const AnalysisOptions& options) {
  MomentAnalysis out;
  out.model = model;
  out.moment = moment;
  out.se = options.se.value_or(default_covariance(model));

  switch (model) {
    case ModelSpec::LogisticEq1:
      out.design = build_eq1_matrix(data, moment, ResponseKind::Change, options.design);
      break;
    case ModelSpec::LogisticEq2:
      out.design = build_eq2_matrix(data, moment, ResponseKind::Change, options.design);
      break;
    case ModelSpec::MultinomialEq1:
      out.design = build_eq1_matrix(data, moment, ResponseKind::Direction, options.design);
      break;
    case ModelSpec::Mechanism:
      out.design = build_mechanism_matrix(data, moment, options.design);
      break;
  }

  if (model == ModelSpec::MultinomialEq1) {
    out.fit = fit_multinomial(out.design, 0, options.fit, {-1, 0, 1});
  } else {
    out.fit = fit_logistic(out.design, options.fit);
  }

  const Eigen::VectorXd se_model = out.fit.standard_errors(CovarianceFlavor::Model);
  const Eigen::VectorXd se_hc1 = out.fit.standard_errors(CovarianceFlavor::HC1);
  const Eigen::VectorXd se_hc3 = out.fit.standard_errors(CovarianceFlavor::HC3);
  const Eigen::VectorXd se_sel = out.fit.standard_errors(out.se);
  for (std::size_t k = 0; k < out.fit.terms.size(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    EffectRow row;
    row.term = out.fit.terms[k];
    row.estimate = out.fit.coefficients(ki);
    row.se_model = se_model(ki);
    row.se_hc1 = se_hc1(ki);
    row.se_hc3 = se_hc3(ki);
    row.p_value = wald_p_value(row.estimate, se_sel(ki));
    out.effects.push_back(std::move(row));
  }

  if (model == ModelSpec::MultinomialEq1) {
    const auto rrr = relative_risk_ratios(out.fit, out.se);
    for (std::size_t k = 0; k < rrr.size(); ++k) {
      out.effects[k].effect = rrr[k].rrr;
      out.effects[k].effect_se = rrr[k].se;
      out.effects[k].p_value = rrr[k].p_value;
    }
    return out;
  }

  const auto ames = average_marginal_effects(out.fit, out.design, out.se);
  for (const auto& me : ames) {
    for (auto& row : out.effects) {
      if (row.term != me.term) continue;
      row.effect = me.estimate;
      row.effect_se = me.se;
      row.p_value = me.p_value;
    }
  }
  if (model == ModelSpec::LogisticEq1) {
    auto ame_of = [&](const char* name) -> std::optional<double> {
      for (const auto& me : ames) {
        if (me.term == name) return me.estimate;
      }
      return std::nullopt;
    };
    const auto gamma = ame_of(kTreatedColumn);
    const auto delta = ame_of(kTreatedFriendsColumn);
    const auto beta = ame_of(kPeerMeanColumn);
    if (gamma && delta && beta && *beta != 1.0) {
      out.composite = composite_social_effect(*gamma, *delta, *beta);
    }
  }
  return out;
}

namespace {

const char* stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string format_table(const MomentAnalysis& a) {
  const bool rrr = a.model == ModelSpec::MultinomialEq1;
  std::ostringstream os;
  os << "model " << model_spec_name(a.model) << ", moment " << moment_code(a.moment) << ", "
     << (rrr ? "relative risk ratios" : "average marginal effects") << ", " << to_string(a.se)
     << " standard errors\n";
  std::size_t width = 16;
  for (const auto& r : a.effects) width = std::max(width, r.term.size() + 2);
  auto pad = [&](const std::string& s) { return s + std::string(width - s.size(), ' '); };
  for (const auto& r : a.effects) {
    if (!r.effect) continue;
    os << pad(r.term) << fixed(*r.effect, 3) << stars(r.p_value) << '\n';
    os << pad("") << '(' << fixed(r.effect_se.value_or(0.0), 3) << ")\n";
  }
  os << pad("Num. obs.") << a.fit.n_obs << '\n';
  os << pad("Log Likelihood") << fixed(a.fit.log_likelihood, 3) << '\n';
  os << pad("Deviance") << fixed(a.fit.deviance, 3) << '\n';
  os << pad("AIC") << fixed(a.fit.aic, 3) << '\n';
  os << pad("BIC") << fixed(a.fit.bic, 3) << '\n';
  if (a.composite) os << pad("Composite") << fixed(*a.composite, 3) << '\n';
  return os.str();
}

std::array<std::array<std::uint64_t, 3>, 2> direction_by_arm(const StudyData& data, Moment moment) {
  check_sizes(data);
  const auto treated = data.plan.treated(data.graph);
  const auto& dir = data.panel.direction_of(moment);
  std::array<std::array<std::uint64_t, 3>, 2> tab{};
  for (std::size_t i = 0; i < dir.size(); ++i) {
    if (!data.plan.eligible[i] || !dir[i]) continue;
    ++tab[treated[i] ? 0 : 1][static_cast<std::size_t>(*dir[i] + 1)];
  }
  return tab;
}

}  // namespace peerfx
