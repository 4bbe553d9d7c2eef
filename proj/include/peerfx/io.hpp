#pragma once

// File formats: roster, edges, school proportions, assignment plans and the
// run manifest.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peerfx/design.hpp"
#include "peerfx/graph.hpp"
#include "peerfx/student.hpp"

namespace peerfx {

inline constexpr const char* kRosterHeader =
    "student_id,school,gender,class_social,asp_t0,asp_t1,asp_t2,income_asp,grades,mother_edu,grit,"
    "depression,self_efficacy,edu_pref,risk_pref,state";

enum class IncomePolicy { Reject, Winsorize };

IncomePolicy parse_income_policy(const std::string& s);  // reject, winsorize

struct RosterOptions {
  double income_min = 1000.0;    // MXN per month
  double income_max = 100000.0;
  IncomePolicy income_policy = IncomePolicy::Reject;
};

struct Diagnostic {
  std::size_t line = 0;
  std::string field;
  std::string message;
  bool error = true;  // false: warning, row kept
};

struct RosterParse {
  std::vector<StudentRecord> records;   // rows without errors
  std::vector<Diagnostic> diagnostics;
  std::size_t rejected_rows = 0;

  bool ok() const noexcept { return rejected_rows == 0; }
};

// Throws Parse when the header differs from kRosterHeader. Row problems are
// collected as diagnostics; a row with any error is left out of `records`.
RosterParse parse_roster(const std::string& text, const RosterOptions& options = {});
RosterParse read_roster(const std::string& path, const RosterOptions& options = {});
std::string write_roster(std::span<const StudentRecord> roster);

// Header src,dst,weight. Throws Parse with the line number on a bad row.
std::vector<EdgeRow> parse_edges(const std::string& text);
std::vector<EdgeRow> read_edges(const std::string& path);
std::string write_edges(std::span<const EdgeRow> edges);

// Header school,proportion.
ProportionMap parse_proportions(const std::string& text);
ProportionMap read_proportions(const std::string& path);

// student_id,school,eligible,school_arm,spillover_flag, one row per node.
std::string write_plan(const FriendshipGraph& g, const AssignmentPlan& plan);
// school_a,school_b,distance,treated (name of the treated school); the
// unmatched school has an empty school_b.
std::string write_pairs(const FriendshipGraph& g, const AssignmentPlan& plan);

// Rebuilds a plan for `g`. Every node must appear once; school_arm must be
// constant within a school; spillover_flag must equal the derived vector.
AssignmentPlan parse_plan(const std::string& text, const FriendshipGraph& g);
AssignmentPlan read_plan(const std::string& path, const FriendshipGraph& g);

std::string sha256_hex(const std::string& bytes);

struct ManifestInput {
  std::string path;
  std::string sha256;
};

struct Manifest {
  std::string tool_version;
  std::string subcommand;
  std::vector<std::string> arguments;
  std::vector<ManifestInput> inputs;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> outputs;

  void add_input(const std::string& path);
  // Hash of the per-input digests in order; changes when any input byte does.
  std::string inputs_sha256() const;
  std::string to_json() const;
};

void write_text_file(const std::string& path, const std::string& content);

}  // namespace peerfx
