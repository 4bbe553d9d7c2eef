#include "peerfx/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "peerfx/config.hpp"
#include "peerfx/csv.hpp"
#include "peerfx/error.hpp"

namespace peerfx {

IncomePolicy parse_income_policy(const std::string& s) {
  if (s == "reject") return IncomePolicy::Reject;
  if (s == "winsorize") return IncomePolicy::Winsorize;
  throw Error(ErrorKind::InvalidInput, "unknown income policy '" + s + "' (reject or winsorize)");
}

namespace {

std::vector<std::string> split_header(const char* header) {
  std::vector<std::string> out;
  std::istringstream in(header);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

void expect_header(const CsvTable& t, const std::vector<std::string>& want, const char* what) {
  if (t.header != want) {
    std::string joined;
    for (const auto& h : want) joined += (joined.empty() ? "" : ",") + h;
    throw Error(ErrorKind::Parse, std::string(what) + ": header must be '" + joined + "'");
  }
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

RosterParse parse_roster(const std::string& text, const RosterOptions& options) {
  if (!(options.income_min <= options.income_max)) {
    throw Error(ErrorKind::InvalidInput, "income_min exceeds income_max");
  }
  const CsvTable t = parse_csv_table(text);
  expect_header(t, split_header(kRosterHeader), "roster");

  RosterParse out;
  std::set<std::string> seen;
  for (const auto& row : t.rows) {
    const auto& f = row.fields;
    StudentRecord rec;
    bool bad = false;
    auto error = [&](const std::string& field, const std::string& msg) {
      out.diagnostics.push_back({row.line, field, msg, true});
      bad = true;
    };
    rec.id = trimmed(f[0]);
    rec.school = trimmed(f[1]);
    rec.gender = trimmed(f[2]);
    if (rec.id.empty()) error("student_id", "empty student id");
    if (rec.school.empty()) error("school", "empty school");
    if (rec.gender.empty()) error("gender", "empty gender code");
    if (!rec.id.empty() && !seen.insert(rec.id).second) error("student_id", "duplicate id " + rec.id);

    for (std::size_t w = 0; w < kWaves; ++w) {
      const std::string field = "asp_t" + std::to_string(w);
      const std::string v = trimmed(f[4 + w]);
      if (v.empty()) continue;
      try {
        const auto code = parse_int(v, field);
        if (code < kMinAspiration || code > kMaxAspiration) {
          error(field, "aspiration code " + v + " outside 1-5");
        } else {
          rec.aspiration[w] = static_cast<int>(code);
        }
      } catch (const Error&) {
        error(field, "aspiration code '" + v + "' is not an integer");
      }
    }

    // Covariate columns in header order: class_social, then income_asp onward.
    const std::array<std::size_t, kCovariateCount> column = {3, 7, 8, 9, 10, 11, 12, 13, 14, 15};
    for (std::size_t c = 0; c < kCovariateCount; ++c) {
      const std::string name(kCovariateNames[c]);
      const std::string v = trimmed(f[column[c]]);
      if (v.empty()) continue;
      try {
        const double x = parse_double(v, name);
        if (!std::isfinite(x)) {
          error(name, "non-finite value");
          continue;
        }
        rec.covariates[c] = x;
      } catch (const Error&) {
        error(name, "'" + v + "' is not a number");
      }
    }

    if (auto& inc = rec.covariate(Covariate::IncomeAsp)) {
      if (*inc < options.income_min || *inc > options.income_max) {
        std::ostringstream msg;
        msg << "income aspiration " << format_double(*inc) << " outside [" << format_double(options.income_min)
            << ", " << format_double(options.income_max) << "]";
        if (options.income_policy == IncomePolicy::Reject) {
          error("income_asp", msg.str());
        } else {
          inc = std::clamp(*inc, options.income_min, options.income_max);
          out.diagnostics.push_back({row.line, "income_asp", msg.str() + "; winsorized", false});
        }
      }
    }

    if (bad) {
      ++out.rejected_rows;
    } else {
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

RosterParse read_roster(const std::string& path, const RosterOptions& options) {
  try {
    return parse_roster(read_file(path), options);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path + ": " + e.what());
  }
}

std::string write_roster(std::span<const StudentRecord> roster) {
  std::ostringstream os;
  os << kRosterHeader << '\n';
  CsvWriter w(os);
  const std::array<std::size_t, kCovariateCount> column = {3, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  for (const auto& r : roster) {
    std::vector<std::string> f(16);
    f[0] = r.id;
    f[1] = r.school;
    f[2] = r.gender;
    for (std::size_t t = 0; t < kWaves; ++t) {
      if (r.aspiration[t]) f[4 + t] = std::to_string(*r.aspiration[t]);
    }
    for (std::size_t c = 0; c < kCovariateCount; ++c) {
      if (r.covariates[c]) f[column[c]] = format_double(*r.covariates[c]);
    }
    w.row(f);
  }
  return os.str();
}

std::vector<EdgeRow> parse_edges(const std::string& text) {
  const CsvTable t = parse_csv_table(text);
  expect_header(t, {"src", "dst", "weight"}, "edges");
  std::vector<EdgeRow> edges;
  edges.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    EdgeRow e;
    e.src = trimmed(row.fields[0]);
    e.dst = trimmed(row.fields[1]);
    const std::string w = trimmed(row.fields[2]);
    if (e.src.empty() || e.dst.empty()) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(row.line) + ": empty endpoint");
    }
    try {
      e.weight = w.empty() ? 1.0 : parse_double(w, "weight");
    } catch (const Error&) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(row.line) + ": bad weight '" + w + "'");
    }
    edges.push_back(std::move(e));
  }
  return edges;
}

std::vector<EdgeRow> read_edges(const std::string& path) {
  try {
    return parse_edges(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path + ": " + e.what());
  }
}

std::string write_edges(std::span<const EdgeRow> edges) {
  std::ostringstream os;
  CsvWriter w(os);
  w.row({"src", "dst", "weight"});
  for (const auto& e : edges) w.row({e.src, e.dst, format_double(e.weight)});
  return os.str();
}

ProportionMap parse_proportions(const std::string& text) {
  const CsvTable t = parse_csv_table(text);
  expect_header(t, {"school", "proportion"}, "proportions");
  ProportionMap out;
  for (const auto& row : t.rows) {
    const std::string school = trimmed(row.fields[0]);
    double p = 0.0;
    try {
      p = parse_double(trimmed(row.fields[1]), "proportion");
    } catch (const Error&) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(row.line) + ": bad proportion");
    }
    if (!out.emplace(school, p).second) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(row.line) + ": repeated school " + school);
    }
  }
  return out;
}

ProportionMap read_proportions(const std::string& path) {
  try {
    return parse_proportions(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path + ": " + e.what());
  }
}

std::string write_plan(const FriendshipGraph& g, const AssignmentPlan& plan) {
  std::ostringstream os;
  CsvWriter w(os);
  w.row({"student_id", "school", "eligible", "school_arm", "spillover_flag"});
  for (NodeIndex i = 0; i < g.node_count(); ++i) {
    const SchoolIndex s = g.school_of(i);
    w.row({g.id(i), g.school_name(s), std::to_string(plan.eligible[i]),
           std::to_string(plan.school_arm[s]), std::to_string(plan.spillover[i])});
  }
  return os.str();
}

std::string write_pairs(const FriendshipGraph& g, const AssignmentPlan& plan) {
  auto arm = [&](const std::string& school) {
    const auto s = g.find_school(school);
    if (!s) throw Error(ErrorKind::InvalidInput, "unknown school " + school);
    return plan.school_arm.at(*s);
  };
  std::ostringstream os;
  CsvWriter w(os);
  w.row({"school_a", "school_b", "distance", "treated"});
  for (const auto& p : plan.pairs) {
    w.row({p.first, p.second, format_double(p.distance), arm(p.first) ? p.first : p.second});
  }
  if (plan.unmatched) w.row({*plan.unmatched, "", "", arm(*plan.unmatched) ? *plan.unmatched : ""});
  return os.str();
}

AssignmentPlan parse_plan(const std::string& text, const FriendshipGraph& g) {
  const CsvTable t = parse_csv_table(text);
  expect_header(t, {"student_id", "school", "eligible", "school_arm", "spillover_flag"}, "plan");
  AssignmentPlan plan;
  plan.eligible.assign(g.node_count(), 0);
  plan.school_arm.assign(g.school_count(), 0);
  std::vector<std::uint8_t> seen(g.node_count(), 0), school_seen(g.school_count(), 0);
  std::vector<std::uint8_t> spill(g.node_count(), 0);
  auto flag = [](const CsvRow& row, std::size_t col, const char* name) -> std::uint8_t {
    const std::string v = trimmed(row.fields[col]);
    if (v == "0") return 0;
    if (v == "1") return 1;
    throw Error(ErrorKind::Parse, "line " + std::to_string(row.line) + ": " + name + " must be 0 or 1");
  };
  for (const auto& row : t.rows) {
    const auto node = g.find(trimmed(row.fields[0]));
    const std::string where = "line " + std::to_string(row.line) + ": ";
    if (!node) throw Error(ErrorKind::UnknownNode, where + "unknown student " + row.fields[0]);
    if (seen[*node]) throw Error(ErrorKind::Parse, where + "student listed twice");
    seen[*node] = 1;
    const SchoolIndex s = g.school_of(*node);
    if (trimmed(row.fields[1]) != g.school_name(s)) {
      throw Error(ErrorKind::Parse, where + "school does not match the roster");
    }
    plan.eligible[*node] = flag(row, 2, "eligible");
    const std::uint8_t arm = flag(row, 3, "school_arm");
    if (school_seen[s] && plan.school_arm[s] != arm) {
      throw Error(ErrorKind::Parse, where + "school_arm differs within school " + g.school_name(s));
    }
    school_seen[s] = 1;
    plan.school_arm[s] = arm;
    spill[*node] = flag(row, 4, "spillover_flag");
  }
  if (std::find(seen.begin(), seen.end(), std::uint8_t{0}) != seen.end()) {
    throw Error(ErrorKind::Parse, "plan does not list every student");
  }
  plan.spillover = derive_spillover_vector(g, plan.eligible, plan.school_arm);
  if (plan.spillover != spill) {
    throw Error(ErrorKind::Parse, "spillover_flag disagrees with eligibility and school arms");
  }
  return plan;
}

AssignmentPlan read_plan(const std::string& path, const FriendshipGraph& g) {
  try {
    return parse_plan(read_file(path), g);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path + ": " + e.what());
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Io, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

void Manifest::add_input(const std::string& path) { inputs.push_back({path, sha256_hex(read_file(path))}); }

std::string Manifest::inputs_sha256() const {
  std::string joined;
  for (const auto& in : inputs) joined += in.sha256 + "\n";
  return sha256_hex(joined);
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "peerfx";
  j["version"] = tool_version;
  j["subcommand"] = subcommand;
  j["arguments"] = arguments;
  j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& in : inputs) j["inputs"].push_back({{"path", in.path}, {"sha256", in.sha256}});
  j["inputs_sha256"] = inputs_sha256();
  if (seed) {
    j["seed"] = *seed;
  } else {
    j["seed"] = nullptr;
  }
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  f << content;
  if (!f) throw Error(ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace peerfx
