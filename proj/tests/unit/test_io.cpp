#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "peerfx/config.hpp"
#include "peerfx/csv.hpp"
#include "peerfx/design.hpp"
#include "peerfx/error.hpp"
#include "peerfx/io.hpp"

using namespace peerfx;

namespace {

std::string roster_text(const std::vector<std::string>& rows) {
  std::string s = std::string(kRosterHeader) + "\n";
  for (const auto& r : rows) s += r + "\n";
  return s;
}

const char* kGoodRow = "a1,s1,F,2,3,4,,5000,8.5,3,4,2,3,4,0.4,1";

}  // namespace

TEST_CASE("csv parsing") {
  const auto rows = parse_csv("\xEF\xBB\xBFx,y\n1,\"a,b\"\n\n\"multi\nline\",\"q\"\"x\"\r\n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].fields[0] == "x");
  CHECK(rows[1].fields[1] == "a,b");
  CHECK(rows[2].fields[0] == "multi\nline");
  CHECK(rows[2].fields[1] == "q\"x");
  CHECK(rows[2].line == 4);
  CHECK_THROWS_AS(parse_csv("a,\"unterminated\n"), Error);
  CHECK_THROWS_AS(parse_csv("a,b\"c\n"), Error);
  CHECK_THROWS_AS(parse_csv_table("a,b\n1,2,3\n"), Error);
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("format_double round-trips") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(30)) - 15);
    CHECK(parse_double(format_double(v), "v") == v);
  }
  CHECK(format_double(std::nan("")) == "NA");
}

TEST_CASE("roster validation collects row diagnostics") {
  const auto ok = parse_roster(roster_text({kGoodRow}));
  REQUIRE(ok.ok());
  REQUIRE(ok.records.size() == 1);
  CHECK(ok.records[0].aspiration[0] == 3);
  CHECK_FALSE(ok.records[0].aspiration[2].has_value());
  CHECK(*ok.records[0].covariate(Covariate::RiskPref) == doctest::Approx(0.4));

  const auto bad = parse_roster(roster_text({
      kGoodRow,
      "a1,s1,F,2,3,4,,5000,8.5,3,4,2,3,4,0.4,1",       // duplicate id
      "a2,s1,F,2,7,4,,5000,8.5,3,4,2,3,4,0.4,1",       // aspiration outside 1-5
      "a3,s1,F,2,3,x,,5000,8.5,3,4,2,3,4,0.4,1",       // non-integer aspiration
      "a4,s1,F,2,3,4,,500,8.5,3,4,2,3,4,0.4,1",        // income below range
      "a5,s1,F,2,3,4,,5000,abc,3,4,2,3,4,0.4,1",       // non-numeric covariate
      ",s1,F,2,3,4,,5000,8.5,3,4,2,3,4,0.4,1",         // empty id
  }));
  CHECK_FALSE(bad.ok());
  CHECK(bad.records.size() == 1);
  CHECK(bad.rejected_rows == 6);
  CHECK(bad.diagnostics.size() == 6);
  CHECK(bad.diagnostics[0].line == 3);
  CHECK(bad.diagnostics[3].field == "income_asp");

  RosterOptions w;
  w.income_policy = IncomePolicy::Winsorize;
  const auto wins = parse_roster(roster_text({"a4,s1,F,2,3,4,,500,8.5,3,4,2,3,4,0.4,1"}), w);
  CHECK(wins.ok());
  CHECK(*wins.records[0].covariate(Covariate::IncomeAsp) == 1000.0);
  CHECK_FALSE(wins.diagnostics[0].error);

  CHECK_THROWS_AS(parse_roster("student_id,school\n"), Error);
  CHECK_THROWS_AS(parse_income_policy("drop"), Error);
}

TEST_CASE("roster and edges round-trip") {
  Rng rng(2);
  auto net = oracle::random_network(rng, 3, 5, 10, 0.3);
  for (auto& r : net.roster) {
    r.aspiration[1] = 2;
    r.covariate(Covariate::Grades) = rng.uniform() * 10;
    r.covariate(Covariate::IncomeAsp) = 2000 + rng.uniform();
  }
  net.roster[0].school = "school, with comma";
  const auto back = parse_roster(write_roster(net.roster));
  REQUIRE(back.ok());
  CHECK(back.records == net.roster);

  const auto edges = parse_edges(write_edges(net.edges));
  REQUIRE(edges.size() == net.edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    CHECK(edges[k].src == net.edges[k].src);
    CHECK(edges[k].weight == net.edges[k].weight);
  }
  CHECK(parse_edges("src,dst,weight\na,b,\n")[0].weight == 1.0);
  CHECK_THROWS_AS(parse_edges("src,dst,weight\na,b,heavy\n"), Error);
  CHECK_THROWS_AS(parse_edges("from,to\na,b\n"), Error);
}

TEST_CASE("plan round-trip and validation") {
  Rng rng(3);
  const auto net = oracle::random_network(rng, 5, 15, 25, 0.15);
  const auto g = build_graph(net.edges, net.roster);
  const auto d = design_experiment(g, net.roster, {}, 4);
  const std::string text = write_plan(g, d.plan);
  const auto back = parse_plan(text, g);
  CHECK(back.eligible == d.plan.eligible);
  CHECK(back.school_arm == d.plan.school_arm);
  CHECK(back.spillover == d.plan.spillover);

  // A tampered spillover flag is caught.
  auto lines = parse_csv(text);
  std::string tampered = "student_id,school,eligible,school_arm,spillover_flag\n";
  for (std::size_t k = 1; k < lines.size(); ++k) {
    auto f = lines[k].fields;
    if (k == 1) f[4] = f[4] == "1" ? "0" : "1";
    tampered += f[0] + "," + f[1] + "," + f[2] + "," + f[3] + "," + f[4] + "\n";
  }
  CHECK_THROWS_AS(parse_plan(tampered, g), Error);
  // A missing node is caught.
  CHECK_THROWS_AS(parse_plan(text.substr(0, text.rfind('\n', text.size() - 2) + 1), g), Error);

  const auto pairs = parse_csv(write_pairs(g, d.plan));
  CHECK(pairs.size() == d.plan.pairs.size() + 1 + (d.plan.unmatched ? 1 : 0));
}

TEST_CASE("proportions file") {
  const auto p = parse_proportions("school,proportion\na,0.5\nb,0.978\n");
  CHECK(p.at("b") == doctest::Approx(0.978));
  CHECK_THROWS_AS(parse_proportions("school,proportion\na,0.5\na,0.6\n"), Error);
}

TEST_CASE("key-value configuration") {
  const auto kv = KeyValues::parse("# comment\nseed = 42\nalpha=0.5 # trailing\nlist = 1, 2,3\nflag = true\n");
  CHECK(*kv.get_uint("seed") == 42);
  CHECK(*kv.get_double("alpha") == 0.5);
  CHECK(kv.get_doubles("list")->size() == 3);
  CHECK(*kv.get_bool("flag"));
  CHECK_FALSE(kv.get("missing").has_value());
  CHECK(kv.unknown_keys({"seed", "alpha", "list"}) == std::vector<std::string>{"flag"});
  CHECK_THROWS_AS(KeyValues::parse("novalue\n"), Error);
  CHECK_THROWS_AS(KeyValues::parse("a=1\na=2\n"), Error);
  CHECK_THROWS_AS(kv.get_int("alpha"), Error);
}

TEST_CASE("sha256 and manifest") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto dir = std::filesystem::temp_directory_path() / "peerfx_manifest_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "in.txt").string();
  write_text_file(path, "abc");
  Manifest m;
  m.tool_version = "x";
  m.subcommand = "design";
  m.add_input(path);
  CHECK(m.inputs[0].sha256 == sha256_hex("abc"));
  const std::string before = m.inputs_sha256();
  write_text_file(path, "abd");
  Manifest m2 = m;
  m2.inputs.clear();
  m2.add_input(path);
  CHECK(m2.inputs_sha256() != before);
  CHECK(m.to_json().find("\"subcommand\": \"design\"") != std::string::npos);
  std::filesystem::remove_all(dir);
}
