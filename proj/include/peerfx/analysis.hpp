#pragma once

// Outcome construction, the treatment / spillover / mechanism design
// matrices, and the per-moment estimation runs.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peerfx/design.hpp"
#include "peerfx/glm.hpp"
#include "peerfx/graph.hpp"
#include "peerfx/student.hpp"

namespace peerfx {

// Outcome-change window: 10 = baseline -> intervention, 21 = intervention ->
// endline, 20 = baseline -> endline.
enum class Moment { M10 = 0, M21 = 1, M20 = 2 };

inline constexpr std::array<Moment, 3> kMoments = {Moment::M10, Moment::M21, Moment::M20};

Moment parse_moment(const std::string& code);  // "10", "21", "20"
std::string moment_code(Moment m);
std::size_t moment_later_wave(Moment m);
std::size_t moment_earlier_wave(Moment m);

struct OutcomePanel {
  std::size_t n_students = 0;
  std::vector<std::optional<int>> baseline;  // y_0
  std::array<std::vector<std::optional<int>>, 3> change;     // y^c per moment, {0,1}
  std::array<std::vector<std::optional<int>>, 3> direction;  // y^dc per moment, {-1,0,1}
  std::array<std::size_t, 3> missing{};  // students lacking either endpoint

  const std::vector<std::optional<int>>& change_of(Moment m) const {
    return change[static_cast<std::size_t>(m)];
  }
  const std::vector<std::optional<int>>& direction_of(Moment m) const {
    return direction[static_cast<std::size_t>(m)];
  }
};

// Throws InvalidInput on an aspiration code outside 1-5.
OutcomePanel build_outcomes(std::span<const StudentRecord> roster);

enum class ResponseKind { Change, Direction };

struct DesignOptions {
  bool covariates = false;             // full covariate set
  bool standardize_peer_mean = false;  // z-score G_i y over the whole graph
};

// Column names used in the estimation tables.
inline constexpr const char* kTreatedColumn = "Treated";
inline constexpr const char* kTreatedSchoolColumn = "TreatedSchool";
inline constexpr const char* kPeerMeanColumn = "PeerEffects(avg)";
inline constexpr const char* kTreatedFriendsColumn = "PropTreatFr";

struct StudyData {
  const FriendshipGraph& graph;
  std::span<const StudentRecord> roster;
  const AssignmentPlan& plan;
  const OutcomePanel& panel;
};

// Eligible students (treated and eligible controls); columns intercept,
// Treated, PeerEffects(avg) from baseline aspirations, PropTreatFr.
DesignMatrix build_eq1_matrix(const StudyData& data, Moment moment, ResponseKind response,
                              const DesignOptions& options = {});

// Non-eligible students of every school; treatment column is the spillover
// flag (TreatedSchool).
DesignMatrix build_eq2_matrix(const StudyData& data, Moment moment, ResponseKind response,
                              const DesignOptions& options = {});

// Eq. 1 columns plus change_t<moment>: share of friends whose aspirations
// changed in the same window.
DesignMatrix build_mechanism_matrix(const StudyData& data, Moment moment,
                                    const DesignOptions& options = {});

struct NamedColumns {
  std::vector<std::string> names;
  std::vector<std::vector<std::optional<double>>> values;  // per column, per node
};

// Pre-treatment covariates of the robustness models: baseline aspiration
// dummies (reference undergraduate), class_social dummies coded 1 low, 2
// lower-middle, 3 upper-middle, 4 high (reference high), grades, edu_pref,
// risk_pref, depression, self_efficacy, grit, local transitivity (0 below
// degree 2), female, mother_edu, state.
NamedColumns full_covariates(const StudyData& data);

// Share of each student's friends with y^c = 1 in the window; friends without
// an observed outcome are skipped.
std::vector<std::optional<double>> friend_change_share(const FriendshipGraph& g,
                                                       const OutcomePanel& panel, Moment moment);

// (gamma + delta) / (1 - beta). Throws InvalidInput when beta == 1.
double composite_social_effect(double gamma, double delta, double beta);

enum class ModelSpec { LogisticEq1, LogisticEq2, MultinomialEq1, Mechanism };

ModelSpec parse_model_spec(const std::string& s);  // eq1, eq2, multinomial, mechanism
std::string model_spec_name(ModelSpec m);

struct AnalysisOptions {
  DesignOptions design;
  std::optional<CovarianceFlavor> se;  // default: HC3 logistic, HC1 mechanism, model RRR
  FitOptions fit;
};

struct EffectRow {
  std::string term;
  double estimate = 0.0;
  double se_model = 0.0;
  double se_hc1 = 0.0;
  double se_hc3 = 0.0;
  std::optional<double> effect;     // AME (logistic) or RRR (multinomial)
  std::optional<double> effect_se;  // against the selected covariance
  double p_value = 1.0;             // Wald p of the effect (or coefficient)
};

struct MomentAnalysis {
  ModelSpec model = ModelSpec::LogisticEq1;
  Moment moment = Moment::M10;
  CovarianceFlavor se = CovarianceFlavor::HC3;
  DesignMatrix design;
  FitResult fit;
  std::vector<EffectRow> effects;
  std::optional<double> composite;  // LogisticEq1 only, from the AMEs
};

CovarianceFlavor default_covariance(ModelSpec m);

MomentAnalysis run_moment_analysis(const StudyData& data, Moment moment, ModelSpec model,
                                   const AnalysisOptions& options = {});

// Paper-style text table: effects with stars and SEs in parentheses, then the
// fit-statistics footer.
std::string format_table(const MomentAnalysis& analysis);

// 2 x 3 counts of y^dc (columns -1, 0, +1) for treated (row 0) and eligible
// controls (row 1).
std::array<std::array<std::uint64_t, 3>, 2> direction_by_arm(const StudyData& data, Moment moment);

}  // namespace peerfx
