#include <doctest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "peerfx/cli.hpp"
#include "peerfx/csv.hpp"
#include "peerfx/io.hpp"

using namespace peerfx;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "peerfx");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("peerfx_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("cli pipeline: simulate, stats, design, estimate, balance, attrition") {
  const fs::path dir = scratch("pipeline");
  const std::string sc = (dir / "scenario.txt").string();
  write_text_file(sc, "seed = 5\nn_schools = 6\nstudents_min = 50\nstudents_max = 70\nreplications = 2\nattrition = 0.1\n");
  const std::string sim = (dir / "sim").string();
  auto r = run({"simulate", "--scenario", sc, "--emit-data", "--out", sim});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(fs::path(sim) / "recovery.csv"));
  const std::string roster = (fs::path(sim) / "sim_roster.csv").string();
  const std::string edges = (fs::path(sim) / "sim_edges.csv").string();

  r = run({"stats", "--roster", roster, "--edges", edges, "--out", (dir / "stats").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(read_csv_file((dir / "stats" / "node_metrics.csv").string()).rows.size() == parse_roster(read_file(roster)).records.size());

  const std::string design = (dir / "design").string();
  r = run({"design", "--roster", roster, "--edges", edges, "--seed", "9", "--out", design});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const std::string plan = (fs::path(design) / "plan.csv").string();
  const std::string first = read_file(plan);
  r = run({"design", "--roster", roster, "--edges", edges, "--seed", "9", "--out", design});
  CHECK(read_file(plan) == first);

  const std::string est = (dir / "est").string();
  r = run({"estimate", "--roster", roster, "--edges", edges, "--plan", plan, "--moment", "all", "--out", est});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* m : {"10", "21", "20"}) {
    const auto t = read_csv_file((fs::path(est) / ("effects_eq1_m" + std::string(m) + ".csv")).string());
    CHECK(t.header == std::vector<std::string>{"term", "estimate", "se_model", "se_hc1", "se_hc3", "ame_or_rrr",
                                                "ame_or_rrr_se", "p_value"});
    CHECK(fs::exists(fs::path(est) / ("crosstab_m" + std::string(m) + ".csv")));
  }
  const auto manifest = nlohmann::json::parse(read_file((fs::path(est) / "manifest.json").string()));
  CHECK(manifest["subcommand"] == "estimate");
  CHECK(manifest["inputs"].size() == 3);

  // Same plan via the config file.
  const std::string cfg = (dir / "estimate.cfg").string();
  write_text_file(cfg, "roster = " + roster + "\nedges = " + edges + "\nplan = " + plan + "\nmodel = multinomial\n");
  r = run({"estimate", "--config", cfg, "--out", (dir / "est2").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(dir / "est2" / "effects_multinomial_m10.csv"));

  r = run({"balance", "--roster", roster, "--edges", edges, "--plan", plan, "--out", (dir / "bal").string()});
  CHECK_MESSAGE(r.code == 0, r.err);
  r = run({"attrition", "--roster", roster, "--edges", edges, "--plan", plan, "--out", (dir / "att").string()});
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(dir / "att" / "attrition_histogram.csv"));
  fs::remove_all(dir);
}

TEST_CASE("cli power") {
  const fs::path dir = scratch("power");
  const auto r = run({"power", "--n1", "762", "--n2", "794", "--alpha", "0.001", "--power", "0.91", "--table",
                      "229,419,114;164,528,102", "--counts", "947,393,216", "--out", dir.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto t = read_csv_file((dir / "power.csv").string());
  CHECK(t.rows[0].fields[0] == "detectable_h");
  CHECK(read_csv_file((dir / "sison_glaz.csv").string()).rows.size() == 3);
  fs::remove_all(dir);
}

TEST_CASE("cli errors") {
  const fs::path dir = scratch("errors");
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"design", "--roster", "x.csv"}).code == 2);
  CHECK(run({"power", "--out", dir.string()}).code == 2);

  const auto missing = run({"stats", "--roster", (dir / "none.csv").string(), "--edges", "e.csv", "--out", dir.string()});
  CHECK(missing.code == 1);
  const auto j = nlohmann::json::parse(missing.err.substr(0, missing.err.find('\n')));
  CHECK(j["error"] == "io");
  CHECK(fs::exists(dir / "error.json"));

  // A bad roster row fails the run and is listed in diagnostics.csv.
  const std::string roster = (dir / "roster.csv").string();
  write_text_file(roster, std::string(kRosterHeader) + "\na,s,F,2,9,,,5000,8,3,4,2,3,4,0.4,1\nb,s,M,2,3,,,5000,8,3,4,2,3,4,0.4,1\n");
  write_text_file((dir / "edges.csv").string(), "src,dst,weight\na,b,1\n");
  const auto bad = run({"stats", "--roster", roster, "--edges", (dir / "edges.csv").string(), "--out", dir.string()});
  CHECK(bad.code == 1);
  CHECK(read_csv_file((dir / "diagnostics.csv").string()).rows.size() == 1);

  const std::string cfg = (dir / "bad.cfg").string();
  write_text_file(cfg, "no_such_option = 1\n");
  fs::remove(dir / "error.json");
  const auto unknown = run({"power", "--config", cfg, "--out", dir.string()});
  CHECK(unknown.code == 2);
  const auto ej = nlohmann::json::parse(read_file((dir / "error.json").string()));
  CHECK(ej["subcommand"] == "power");
  CHECK(ej["error"] == "usage");
  fs::remove_all(dir);
}
