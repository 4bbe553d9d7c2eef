#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace peerfx {

// Ordinal aspiration scale, coded 1-5.
enum class Aspiration : int {
  HighSchool = 1,
  Vocational = 2,
  Undergraduate = 3,
  Masters = 4,
  Phd = 5,
};

inline constexpr int kMinAspiration = 1;
inline constexpr int kMaxAspiration = 5;
inline constexpr std::size_t kWaves = 3;  // t0 baseline, t1 intervention, t2 endline

// Roster covariates in roster.csv column order (after the aspiration waves).
enum class Covariate : std::size_t {
  ClassSocial,
  IncomeAsp,
  Grades,
  MotherEdu,
  Grit,
  Depression,
  SelfEfficacy,
  EduPref,
  RiskPref,
  State,
  Count_,
};

inline constexpr std::size_t kCovariateCount = static_cast<std::size_t>(Covariate::Count_);

inline constexpr std::array<std::string_view, kCovariateCount> kCovariateNames = {
    "class_social", "income_asp",    "grades",   "mother_edu", "grit",
    "depression",   "self_efficacy", "edu_pref", "risk_pref",  "state",
};

struct StudentRecord {
  std::string id;
  std::string school;
  std::string gender;  // "M", "F" or any other non-empty code
  std::array<std::optional<int>, kWaves> aspiration;
  std::array<std::optional<double>, kCovariateCount> covariates;

  const std::optional<double>& covariate(Covariate c) const {
    return covariates[static_cast<std::size_t>(c)];
  }
  std::optional<double>& covariate(Covariate c) {
    return covariates[static_cast<std::size_t>(c)];
  }

  bool operator==(const StudentRecord&) const = default;
};

}  // namespace peerfx
