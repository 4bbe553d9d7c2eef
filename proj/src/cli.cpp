#include "peerfx/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "peerfx/analysis.hpp"
#include "peerfx/config.hpp"
#include "peerfx/csv.hpp"
#include "peerfx/design.hpp"
#include "peerfx/error.hpp"
#include "peerfx/graph.hpp"
#include "peerfx/io.hpp"
#include "peerfx/simulation.hpp"
#include "peerfx/stats.hpp"

namespace peerfx {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string out_dir = ".";
  std::string roster;
  std::string edges;
  std::string proportions;
  std::string plan;
  std::optional<std::uint64_t> seed;
  double default_proportion = kDefaultSelectionProportion;
  double income_min = 1000.0;
  double income_max = 100000.0;
  std::string income_policy = "reject";

  // estimate
  std::string moments = "10";
  std::string model = "eq1";
  std::string covariates = "none";
  std::string se;
  bool standardize = false;
  int max_iter = 100;
  double tol = 1e-8;

  // power
  std::optional<double> n1, n2, h, power, t, margin, target_n;
  double alpha = 0.05;
  std::string counts;
  double ci_alpha = 0.05;
  std::string table;

  // attrition
  double attrition_alpha = 0.05;
  std::size_t bins = 20;

  // simulate
  std::string scenario;
  std::optional<std::size_t> replications;
  std::optional<std::size_t> threads;
  bool emit_data = false;
};

struct Context {
  Options& opt;
  Manifest manifest;
  std::ostream& out;
  std::ostream& err;

  void write(const std::string& name, const std::string& content) {
    write_text_file((fs::path(opt.out_dir) / name).string(), content);
    manifest.outputs.push_back(name);
  }
};

std::string fmt(double v) { return format_double(v); }
std::string fmt(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

template <typename Rows>
std::string csv_text(const std::vector<std::string>& header, const Rows& rows) {
  std::ostringstream os;
  CsvWriter w(os);
  w.row(header);
  for (const auto& r : rows) w.row(r);
  return os.str();
}

struct Network {
  std::vector<StudentRecord> roster;
  std::vector<EdgeRow> edges;
  FriendshipGraph graph;
};

Network load_network(Context& ctx) {
  RosterOptions ro;
  ro.income_min = ctx.opt.income_min;
  ro.income_max = ctx.opt.income_max;
  ro.income_policy = parse_income_policy(ctx.opt.income_policy);
  ctx.manifest.add_input(ctx.opt.roster);
  RosterParse parsed = read_roster(ctx.opt.roster, ro);
  if (!parsed.diagnostics.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& d : parsed.diagnostics) {
      rows.push_back({std::to_string(d.line), d.field, d.error ? "error" : "warning", d.message});
      ctx.err << ctx.opt.roster << ":" << d.line << ": " << (d.error ? "error" : "warning") << ": "
              << d.field << ": " << d.message << '\n';
    }
    ctx.write("diagnostics.csv", csv_text({"line", "field", "severity", "message"}, rows));
  }
  if (!parsed.ok()) {
    throw Error(ErrorKind::InvalidInput, ctx.opt.roster + ": " + std::to_string(parsed.rejected_rows) +
                                             " row(s) rejected, see diagnostics.csv");
  }
  ctx.manifest.add_input(ctx.opt.edges);
  Network net;
  net.roster = std::move(parsed.records);
  net.edges = read_edges(ctx.opt.edges);
  net.graph = build_graph(net.edges, net.roster);
  return net;
}

ProportionMap load_proportions(Context& ctx) {
  if (ctx.opt.proportions.empty()) return {};
  ctx.manifest.add_input(ctx.opt.proportions);
  return read_proportions(ctx.opt.proportions);
}

AssignmentPlan load_or_design_plan(Context& ctx, const Network& net) {
  if (!ctx.opt.plan.empty()) {
    ctx.manifest.add_input(ctx.opt.plan);
    return read_plan(ctx.opt.plan, net.graph);
  }
  if (!ctx.opt.seed) throw Error(ErrorKind::Usage, "either --plan or --seed is required");
  return design_experiment(net.graph, net.roster, load_proportions(ctx), *ctx.opt.seed,
                           ctx.opt.default_proportion)
      .plan;
}

void cmd_stats(Context& ctx) {
  const Network net = load_network(ctx);
  const FriendshipGraph& g = net.graph;
  const auto nodes = node_metrics(g);
  const auto schools = school_metrics(g);
  const auto ident = identification_check(g);

  std::vector<std::vector<std::string>> rows;
  double deg = 0, in = 0, outd = 0;
  for (NodeIndex i = 0; i < g.node_count(); ++i) {
    const auto& m = nodes[i];
    rows.push_back({g.id(i), g.school_name(g.school_of(i)), std::to_string(m.degree),
                    std::to_string(m.indegree), std::to_string(m.outdegree), fmt(m.strength),
                    fmt(m.betweenness), fmt(m.local_transitivity)});
    deg += static_cast<double>(m.degree);
    in += static_cast<double>(m.indegree);
    outd += static_cast<double>(m.outdegree);
  }
  ctx.write("node_metrics.csv",
            csv_text({"student_id", "school", "degree", "indegree", "outdegree", "strength",
                      "betweenness", "local_transitivity"},
                     rows));

  rows.clear();
  for (const auto& s : schools) {
    rows.push_back({s.school, std::to_string(s.n_students), std::to_string(s.edge_count),
                    fmt(s.global_transitivity), std::to_string(s.open_triangle_count),
                    std::to_string(s.diameter), s.connected ? "1" : "0"});
  }
  ctx.write("school_metrics.csv",
            csv_text({"school", "n_students", "edge_count", "global_transitivity", "open_triangles",
                      "diameter", "connected"},
                     rows));

  rows.clear();
  for (const auto& s : ident.schools) {
    rows.push_back({s.school, std::to_string(s.n_students), std::to_string(s.rank),
                    std::to_string(s.open_triangle_count), std::to_string(s.diameter)});
  }
  ctx.write("identification.csv",
            csv_text({"school", "n_students", "rank", "open_triangles", "diameter"}, rows));

  const double n = static_cast<double>(std::max<std::size_t>(g.node_count(), 1));
  const std::vector<std::vector<std::string>> summary = {
      {"nodes", std::to_string(g.node_count())},
      {"edges", std::to_string(g.edge_count())},
      {"schools", std::to_string(g.school_count())},
      {"mean_degree", fmt(deg / n)},
      {"mean_indegree", fmt(in / n)},
      {"mean_outdegree", fmt(outd / n)},
      {"rank", std::to_string(ident.rank)},
      {"full_rank", std::to_string(ident.full_rank)},
      {"dependent_rows", std::to_string(ident.dependent_rows)},
      {"diameter", std::to_string(ident.diameter)},
      {"identified", ident.identified ? "1" : "0"},
      {"i_g_g2_independent", ident.i_g_g2_independent ? "1" : "0"},
  };
  ctx.write("network_summary.csv", csv_text({"metric", "value"}, summary));
  for (const auto& r : summary) ctx.out << r[0] << std::string(20 - r[0].size(), ' ') << r[1] << '\n';
}

void cmd_design(Context& ctx) {
  if (!ctx.opt.seed) throw Error(ErrorKind::Usage, "design requires --seed");
  ctx.manifest.seed = ctx.opt.seed;
  const Network net = load_network(ctx);
  const DesignResult d = design_experiment(net.graph, net.roster, load_proportions(ctx),
                                           *ctx.opt.seed, ctx.opt.default_proportion);
  ctx.write("plan.csv", write_plan(net.graph, d.plan));
  ctx.write("pairs.csv", write_pairs(net.graph, d.plan));

  std::vector<std::vector<std::string>> rows;
  for (std::size_t s = 0; s < d.selection.schools.size(); ++s) {
    const auto& sel = d.selection.schools[s];
    const auto& f = d.features[s];
    rows.push_back({sel.school, std::to_string(sel.n_students), fmt(sel.median_strength),
                    std::to_string(sel.pool_size), std::to_string(sel.target),
                    std::to_string(sel.selected), sel.shortfall ? "1" : "0", fmt(f.global_transitivity),
                    std::to_string(d.plan.school_arm.at(*net.graph.find_school(sel.school)))});
    if (sel.shortfall) {
      ctx.err << "warning: school " << sel.school << " pool " << sel.pool_size << " below target "
              << sel.target << '\n';
    }
  }
  ctx.write("selection.csv",
            csv_text({"school", "n_students", "median_strength", "pool_size", "target", "selected",
                      "shortfall", "global_transitivity", "school_arm"},
                     rows));
  std::size_t eligible = 0, treated = 0;
  const auto tr = d.plan.treated(net.graph);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    eligible += d.plan.eligible[i];
    treated += tr[i];
  }
  ctx.out << "schools " << net.graph.school_count() << ", pairs " << d.plan.pairs.size()
          << (d.plan.unmatched ? ", unmatched " + *d.plan.unmatched : std::string{}) << '\n'
          << "eligible " << eligible << ", treated " << treated << '\n';
}

std::vector<Moment> parse_moments(const std::string& s) {
  if (s == "all") return {kMoments.begin(), kMoments.end()};
  std::vector<Moment> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_moment(item));
  if (out.empty()) throw Error(ErrorKind::InvalidInput, "no moment given");
  return out;
}

void cmd_estimate(Context& ctx) {
  const auto moments = parse_moments(ctx.opt.moments);
  const ModelSpec model = parse_model_spec(ctx.opt.model);
  if (ctx.opt.covariates != "none" && ctx.opt.covariates != "full") {
    throw Error(ErrorKind::InvalidInput, "--covariates must be none or full");
  }
  AnalysisOptions ao;
  ao.design.covariates = ctx.opt.covariates == "full";
  ao.design.standardize_peer_mean = ctx.opt.standardize;
  if (!ctx.opt.se.empty()) ao.se = parse_covariance_flavor(ctx.opt.se);
  ao.fit.max_iter = ctx.opt.max_iter;
  ao.fit.tol = ctx.opt.tol;
  ctx.manifest.seed = ctx.opt.seed;

  const Network net = load_network(ctx);
  const AssignmentPlan plan = load_or_design_plan(ctx, net);
  const OutcomePanel panel = build_outcomes(net.roster);
  const StudyData data{net.graph, net.roster, plan, panel};

  for (Moment m : moments) {
    const MomentAnalysis a = run_moment_analysis(data, m, model, ao);
    const std::string stem = model_spec_name(model) + "_m" + moment_code(m);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : a.effects) {
      rows.push_back({r.term, fmt(r.estimate), fmt(r.se_model), fmt(r.se_hc1), fmt(r.se_hc3),
                      fmt(r.effect), fmt(r.effect_se), fmt(r.p_value)});
    }
    auto footer = [&](const std::string& name, const std::string& value) {
      rows.push_back({name, value, "", "", "", "", "", ""});
    };
    footer("Num. obs.", std::to_string(a.fit.n_obs));
    footer("Log Likelihood", fmt(a.fit.log_likelihood));
    footer("Deviance", fmt(a.fit.deviance));
    footer("AIC", fmt(a.fit.aic));
    footer("BIC", fmt(a.fit.bic));
    if (a.composite) footer("Composite", fmt(*a.composite));
    ctx.write("effects_" + stem + ".csv",
              csv_text({"term", "estimate", "se_model", "se_hc1", "se_hc3", "ame_or_rrr",
                        "ame_or_rrr_se", "p_value"},
                       rows));
    const std::string table = format_table(a);
    ctx.write("table_" + stem + ".txt", table);
    ctx.out << table;
    if (a.design.dropped_missing > 0) {
      ctx.err << "moment " << moment_code(m) << ": " << a.design.dropped_missing
              << " row(s) dropped for missing values\n";
    }
    if (!a.fit.converged) ctx.err << "warning: moment " << moment_code(m) << " did not converge\n";

    if (model == ModelSpec::LogisticEq1 || model == ModelSpec::MultinomialEq1) {
      const auto tab = direction_by_arm(data, m);
      std::vector<std::vector<std::string>> ct;
      const char* arm[2] = {"treated", "control"};
      for (std::size_t r = 0; r < 2; ++r) {
        ct.push_back({arm[r], std::to_string(tab[r][0]), std::to_string(tab[r][1]),
                      std::to_string(tab[r][2])});
      }
      std::string p;
      try {
        p = fmt(fisher_exact_2x3(tab));
      } catch (const Error&) {
      }
      ct.push_back({"fisher_p", p, "", ""});
      ctx.write("crosstab_m" + moment_code(m) + ".csv",
                csv_text({"arm", "decrease", "unchanged", "increase"}, ct));
    }
  }
}

std::vector<double> split_doubles(const std::string& s, char sep, const char* what) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(parse_double(item, what));
  return out;
}

void cmd_power(Context& ctx) {
  const Options& o = ctx.opt;
  std::vector<std::vector<std::string>> rows;
  if (o.n1 && o.n2 && o.power) {
    rows.push_back({"detectable_h", fmt(detectable_h(*o.n1, *o.n2, o.alpha, *o.power))});
  }
  if (o.n1 && o.n2 && o.h) {
    rows.push_back({"power", fmt(power_two_proportions(*o.h, *o.n1, *o.n2, o.alpha))});
  }
  if (o.t && o.margin) rows.push_back({"min_n", fmt(multinomial_min_n(*o.t, *o.margin))});
  if (o.t && o.target_n) {
    rows.push_back({"margin_for_n", fmt(multinomial_margin_for_n(*o.t, *o.target_n))});
  }
  if (!o.table.empty()) {
    const auto r0 = o.table.substr(0, o.table.find(';'));
    const auto r1 = o.table.find(';') == std::string::npos ? std::string{}
                                                           : o.table.substr(o.table.find(';') + 1);
    const auto a = split_doubles(r0, ',', "table");
    const auto b = split_doubles(r1, ',', "table");
    if (a.size() != 3 || b.size() != 3) {
      throw Error(ErrorKind::InvalidInput, "--table needs two rows of three counts: a,b,c;d,e,f");
    }
    Table2x3 t{};
    for (std::size_t j = 0; j < 3; ++j) {
      if (a[j] < 0 || b[j] < 0 || a[j] != std::floor(a[j]) || b[j] != std::floor(b[j])) {
        throw Error(ErrorKind::InvalidInput, "--table counts must be nonnegative integers");
      }
      t[0][j] = static_cast<std::uint64_t>(a[j]);
      t[1][j] = static_cast<std::uint64_t>(b[j]);
    }
    rows.push_back({"fisher_p", fmt(fisher_exact_2x3(t))});
  }
  if (!o.counts.empty()) {
    std::vector<std::uint64_t> counts;
    for (double c : split_doubles(o.counts, ',', "counts")) {
      if (c < 0 || c != std::floor(c)) throw Error(ErrorKind::InvalidInput, "counts must be integers");
      counts.push_back(static_cast<std::uint64_t>(c));
    }
    const auto sg = sison_glaz_ci(counts, o.ci_alpha);
    std::vector<std::vector<std::string>> ci;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      const auto& iv = sg.intervals[k];
      ci.push_back({std::to_string(k), std::to_string(counts[k]), fmt(iv.estimate), fmt(iv.lower),
                    fmt(iv.upper)});
    }
    ctx.write("sison_glaz.csv", csv_text({"category", "count", "estimate", "lower", "upper"}, ci));
    rows.push_back({"sison_glaz_c", std::to_string(sg.c)});
    rows.push_back({"sison_glaz_gamma", fmt(sg.gamma)});
  }
  if (rows.empty()) {
    throw Error(ErrorKind::Usage,
                "power: give --n1 --n2 with --power or --cohens-h, --t with --margin or --target-n, "
                "--table, or --counts");
  }
  ctx.write("power.csv", csv_text({"quantity", "value"}, rows));
  for (const auto& r : rows) ctx.out << r[0] << ' ' << r[1] << '\n';
}

void cmd_balance(Context& ctx) {
  ctx.manifest.seed = ctx.opt.seed;
  const Network net = load_network(ctx);
  const AssignmentPlan plan = load_or_design_plan(ctx, net);
  const OutcomePanel panel = build_outcomes(net.roster);
  const StudyData data{net.graph, net.roster, plan, panel};
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : covariate_balance(data)) {
    rows.push_back({r.covariate, fmt(r.difference), to_string(r.method), fmt(r.p_value),
                    r.unbalanced ? "unbalanced" : "balanced"});
    ctx.out << r.covariate << ' ' << to_string(r.method) << " p=" << fmt(r.p_value) << ' '
            << (r.unbalanced ? "unbalanced" : "balanced") << '\n';
  }
  ctx.write("balance.csv", csv_text({"covariate", "difference", "method", "p_value", "status"}, rows));
}

void cmd_attrition(Context& ctx) {
  ctx.manifest.seed = ctx.opt.seed;
  const Network net = load_network(ctx);
  const AssignmentPlan plan = load_or_design_plan(ctx, net);
  const OutcomePanel panel = build_outcomes(net.roster);
  const StudyData data{net.graph, net.roster, plan, panel};
  AttritionOptions ao;
  ao.alpha = ctx.opt.attrition_alpha;
  ao.bins = ctx.opt.bins;
  const AttritionReport rep = attrition_mipo(data, ao);
  std::vector<std::vector<std::string>> rows = {
      {"n_students", std::to_string(rep.n_students)},
      {"n_reported", std::to_string(rep.n_reported)},
      {"attrition_rate", fmt(rep.attrition_rate)},
  };
  if (rep.on_treatment) {
    const auto& t = *rep.on_treatment;
    rows.push_back({"z_coefficient", fmt(t.coefficient)});
    rows.push_back({"z_se", fmt(t.se)});
    rows.push_back({"z_p_value", fmt(t.p_value)});
    rows.push_back({"report_rate_z0", fmt(t.rate_z0)});
    rows.push_back({"report_rate_z1", fmt(t.rate_z1)});
  }
  rows.push_back({"alpha", fmt(rep.alpha)});
  rows.push_back({"mipo_violated", rep.mipo_violated ? "1" : "0"});
  if (rep.covariate_model_error) rows.push_back({"covariate_model_error", *rep.covariate_model_error});
  ctx.write("attrition.csv", csv_text({"metric", "value"}, rows));
  std::vector<std::vector<std::string>> hist;
  for (const auto& b : rep.histogram) {
    hist.push_back({fmt(b.left), fmt(b.right), std::to_string(b.count), std::to_string(b.arm)});
  }
  ctx.write("attrition_histogram.csv", csv_text({"bin_left", "bin_right", "count", "arm"}, hist));
  for (const auto& r : rows) ctx.out << r[0] << ' ' << r[1] << '\n';
}

void cmd_simulate(Context& ctx) {
  ctx.manifest.add_input(ctx.opt.scenario);
  SimScenario sc = parse_scenario(KeyValues::load(ctx.opt.scenario));
  if (ctx.opt.replications) sc.replications = *ctx.opt.replications;
  if (ctx.opt.threads) sc.threads = *ctx.opt.threads;
  if (ctx.opt.seed) sc.seed = *ctx.opt.seed;
  sc.validate();
  ctx.manifest.seed = sc.seed;

  if (ctx.opt.emit_data) {
    const ReplicationData d = simulate_replication_data(sc, 0);
    ctx.write("sim_roster.csv", write_roster(d.outcomes.roster));
    ctx.write("sim_edges.csv", write_edges(d.population.edges));
    ctx.write("sim_plan.csv", write_plan(d.population.graph, d.design.plan));
    ctx.write("sim_pairs.csv", write_pairs(d.population.graph, d.design.plan));
  }

  const RecoveryReport rep = run_recovery(sc, sc.replications);
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : rep.parameters) {
    rows.push_back({p.model, p.term, fmt(p.truth), fmt(p.mean), fmt(p.bias), fmt(p.mc_se),
                    fmt(p.coverage), std::to_string(p.n)});
  }
  ctx.write("recovery.csv",
            csv_text({"model", "term", "truth", "mean", "bias", "mc_se", "coverage", "n"}, rows));
  const std::vector<std::vector<std::string>> summary = {
      {"replications", std::to_string(rep.replications)},
      {"failed", std::to_string(rep.failed)},
      {"mc_se_defined", rep.mc_se_defined ? "1" : "0"},
      {"test_alpha", fmt(rep.test_alpha)},
      {"rejection_rate", fmt(rep.rejection_rate)},
      {"positive_rate", fmt(rep.positive_rate)},
      {"spill_rejection_rate", fmt(rep.spill_rejection_rate)},
      {"mean_students", fmt(rep.mean_students)},
      {"mean_eligible", fmt(rep.mean_eligible)},
  };
  ctx.write("recovery_summary.csv", csv_text({"metric", "value"}, summary));
  if (!rep.mc_se_defined) ctx.err << "warning: Monte Carlo SE undefined with fewer than 2 replications\n";
  for (const auto& f : rep.failures) ctx.err << "replication failed: " << f << '\n';
  for (const auto& r : rows) {
    ctx.out << r[0] << ' ' << r[1] << " truth=" << r[2] << " bias=" << r[4] << " mc_se=" << r[5]
            << " coverage=" << r[6] << '\n';
  }
  for (const auto& r : summary) ctx.out << r[0] << ' ' << r[1] << '\n';
}

void add_data_options(CLI::App* sub, Options& o, bool needs_plan) {
  sub->add_option("--roster", o.roster, "roster.csv")->required();
  sub->add_option("--edges", o.edges, "edges.csv")->required();
  sub->add_option("--income-min", o.income_min, "lowest accepted income aspiration");
  sub->add_option("--income-max", o.income_max, "highest accepted income aspiration");
  sub->add_option("--income-policy", o.income_policy, "reject or winsorize out-of-range income");
  if (needs_plan) {
    sub->add_option("--plan", o.plan, "plan.csv from the design subcommand");
    sub->add_option("--seed", o.seed, "design seed, used when no plan is given");
    sub->add_option("--proportions", o.proportions, "proportions.csv");
    sub->add_option("--default-proportion", o.default_proportion, "selection share for unlisted schools");
  }
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "key=value file with option defaults");
  sub->add_option("--out", o.out_dir, "output directory");
}

std::string normalize_key(std::string k) {
  std::replace(k.begin(), k.end(), '_', '-');
  return "--" + k;
}

// Splices config-file values in as options right after the subcommand
// token, skipping options already present on the command line.
std::vector<std::string> apply_config(CLI::App& app, const std::vector<std::string>& args) {
  std::size_t sub_pos = 0;
  CLI::App* sub = nullptr;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (!args[i].empty() && args[i][0] == '-') continue;
    sub = app.get_subcommand_no_throw(args[i]);
    sub_pos = i;
    break;
  }
  if (!sub) return args;
  std::optional<std::string> config;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
  }
  if (!config) return args;
  const KeyValues kv = KeyValues::load(*config);
  std::vector<std::string> injected;
  for (const auto& [key, value] : kv.items()) {
    const std::string name = normalize_key(key);
    if (name == "--config") throw Error(ErrorKind::Usage, "config files cannot nest --config");
    const CLI::Option* opt = sub->get_option_no_throw(name);
    if (!opt) throw Error(ErrorKind::Usage, *config + ": unknown option '" + key + "'");
    const bool given = std::any_of(args.begin() + static_cast<long>(sub_pos), args.end(),
                                   [&](const std::string& a) {
                                     return a == name || a.rfind(name + "=", 0) == 0;
                                   });
    if (given) continue;
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1" || value == "yes") injected.push_back(name);
      continue;
    }
    injected.push_back(name);
    injected.push_back(value);
  }
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<long>(sub_pos + 1));
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + static_cast<long>(sub_pos + 1), args.end());
  return out;
}

void write_error(const Options& o, std::ostream& err, const std::string& subcommand, const char* kind,
                 const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  j["subcommand"] = subcommand;
  err << j.dump() << '\n';
  std::error_code ec;
  if (fs::is_directory(o.out_dir, ec)) {
    try {
      write_text_file((fs::path(o.out_dir) / "error.json").string(), j.dump(2) + "\n");
    } catch (const Error&) {
    }
  }
}

// Best-effort recovery of the subcommand and --out for failures raised before
// the parser has filled Options.
void recover_context(const CLI::App& app, const std::vector<std::string>& args, Options& o,
                     std::string& subcommand) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (subcommand.empty() && !args[i].empty() && args[i][0] != '-' &&
        app.get_subcommand_no_throw(args[i]))
      subcommand = args[i];
    if (args[i] == "--out" && i + 1 < args.size()) o.out_dir = args[i + 1];
    if (args[i].rfind("--out=", 0) == 0) o.out_dir = args[i].substr(6);
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Design and analysis of networked randomized experiments", "peerfx"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  auto* stats = app.add_subcommand("stats", "network metrics and identification diagnostics");
  add_common(stats, o);
  add_data_options(stats, o, false);

  auto* design = app.add_subcommand("design", "select eligible students, match and randomize schools");
  add_common(design, o);
  add_data_options(design, o, false);
  design->add_option("--seed", o.seed, "randomization seed")->required();
  design->add_option("--proportions", o.proportions, "proportions.csv");
  design->add_option("--default-proportion", o.default_proportion, "selection share for unlisted schools");

  auto* estimate = app.add_subcommand("estimate", "fit the outcome models per moment");
  add_common(estimate, o);
  add_data_options(estimate, o, true);
  estimate->add_option("--moment", o.moments, "10, 21, 20, a comma list, or all");
  estimate->add_option("--model", o.model, "eq1, eq2, multinomial or mechanism");
  estimate->add_option("--covariates", o.covariates, "none or full");
  estimate->add_option("--se", o.se, "hc1, hc3 or model");
  estimate->add_flag("--standardize-peer-mean", o.standardize, "z-score the peer-mean regressor");
  estimate->add_option("--max-iter", o.max_iter, "iteration limit");
  estimate->add_option("--tol", o.tol, "score tolerance");

  auto* power = app.add_subcommand("power", "power, sample size, exact test and simultaneous intervals");
  add_common(power, o);
  power->add_option("--n1", o.n1, "treated group size");
  power->add_option("--n2", o.n2, "control group size");
  power->add_option("--alpha", o.alpha, "significance level");
  power->add_option("--power", o.power, "target power, solves for h");
  power->add_option("--cohens-h", o.h, "effect size, solves for power");
  power->add_option("--t", o.t, "critical value for the sample-size formula");
  power->add_option("--margin", o.margin, "margin E for the sample-size formula");
  power->add_option("--target-n", o.target_n, "sample size to back-solve E from");
  power->add_option("--table", o.table, "2x3 counts a,b,c;d,e,f for the exact test");
  power->add_option("--counts", o.counts, "category counts for simultaneous intervals");
  power->add_option("--ci-alpha", o.ci_alpha, "level of the simultaneous intervals");

  auto* balance = app.add_subcommand("balance", "covariate balance of treated versus eligible controls");
  add_common(balance, o);
  add_data_options(balance, o, true);

  auto* attrition = app.add_subcommand("attrition", "endline attrition diagnostics");
  add_common(attrition, o);
  add_data_options(attrition, o, true);
  attrition->add_option("--alpha", o.attrition_alpha, "level of the z-coefficient test");
  attrition->add_option("--bins", o.bins, "histogram bins on [0, 1]");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo recovery on synthetic populations");
  add_common(simulate, o);
  simulate->add_option("--scenario", o.scenario, "scenario key=value file")->required();
  simulate->add_option("--replications", o.replications, "override the scenario's count");
  simulate->add_option("--threads", o.threads, "worker threads");
  simulate->add_option("--seed", o.seed, "override the scenario seed");
  simulate->add_flag("--emit-data", o.emit_data, "write replication 0 as roster/edges/plan CSVs");

  std::string subcommand;
  try {
    std::vector<std::string> full = apply_config(app, args);
    std::vector<std::string> rev(full.rbegin(), full.rend());
    if (!rev.empty()) rev.pop_back();  // program name
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    recover_context(app, args, o, subcommand);
    write_error(o, err, subcommand, "usage", e.what());
    err << app.help();
    return 2;
  } catch (const Error& e) {
    recover_context(app, args, o, subcommand);
    write_error(o, err, subcommand, to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::Usage ? 2 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  subcommand = sub->get_name();
  Context ctx{o, {}, out, err};
  ctx.manifest.tool_version = kToolVersion;
  ctx.manifest.subcommand = subcommand;
  ctx.manifest.arguments.assign(args.begin() + (args.empty() ? 0 : 1), args.end());
  try {
    fs::create_directories(o.out_dir);
    if (!o.config.empty()) ctx.manifest.add_input(o.config);
    if (subcommand == "stats") cmd_stats(ctx);
    if (subcommand == "design") cmd_design(ctx);
    if (subcommand == "estimate") cmd_estimate(ctx);
    if (subcommand == "power") cmd_power(ctx);
    if (subcommand == "balance") cmd_balance(ctx);
    if (subcommand == "attrition") cmd_attrition(ctx);
    if (subcommand == "simulate") cmd_simulate(ctx);
    write_text_file((fs::path(o.out_dir) / "manifest.json").string(), ctx.manifest.to_json());
  } catch (const Error& e) {
    write_error(o, err, subcommand, to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::Usage ? 2 : 1;
  } catch (const std::exception& e) {
    write_error(o, err, subcommand, "internal", e.what());
    return 1;
  }
  return 0;
}

}  // namespace peerfx
