// flexpool: fit, aggregate, disaggregate, bidcurve and bench subcommands.
// Exit codes: 0 ok, 2 I/O or configuration, 3 infeasible, 4 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flexpool/disagg.hpp"
#include "flexpool/fleet.hpp"
#include "flexpool/io.hpp"
#include "flexpool/regulation.hpp"
#include "flexpool/zonofit.hpp"
#include "suites.hpp"

namespace fs = std::filesystem;
using namespace flexpool;
using io::json;

namespace {

constexpr int kExitOk = 0, kExitConfig = 2, kExitInfeasible = 3, kExitNumerical = 4;

struct Options {
  std::string scenario, prices, out = "flexpool_out", eta_grid, profile;
  std::uint64_t seed = 1;
  bool oracle = false;
  std::optional<unsigned> threads;
  // fit
  std::size_t count = 100;
  Index horizon = 12;
  double step_hours = 2.0;
  bool trips = false;
  // aggregate
  std::vector<std::string> inputs;
  // disaggregate / bidcurve
  std::string zonotopes, costs, p_agg;
  double eps = 1e-3;
  int h = 5;
  double a = 0.0;
};

unsigned thread_count(const Options& o) { return o.threads ? *o.threads : default_threads(); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Config echo, its hash, phase times, metrics and artifact paths.
class RunReport {
 public:
  RunReport(std::string command, json config) : command_(std::move(command)), config_(std::move(config)) {}
  void phase(const std::string& name, double seconds) { phases_[name] = seconds; }
  json& metrics() { return metrics_; }
  void artifact(const fs::path& p) { artifacts_.push_back(p.string()); }

  void write(const fs::path& dir) {
    const fs::path path = dir / "report.json";
    artifact(path);
    std::ostringstream hash;
    hash << std::hex << fnv1a(config_.dump());
    io::write_json(path, {{"command", command_},
                          {"config", config_},
                          {"config_hash", hash.str()},
                          {"phases_s", phases_},
                          {"metrics", metrics_},
                          {"artifacts", artifacts_}});
  }

 private:
  std::string command_;
  json config_, phases_ = json::object(), metrics_ = json::object(), artifacts_ = json::array();
};

json config_json(const Options& o, unsigned threads) {
  return {{"scenario", o.scenario}, {"prices", o.prices},   {"out", o.out},       {"seed", o.seed},
          {"eta_grid", o.eta_grid}, {"oracle", o.oracle},   {"profile", o.profile}, {"threads", threads},
          {"count", o.count},       {"N", o.horizon},       {"t_s_h", o.step_hours}, {"trips", o.trips},
          {"inputs", o.inputs},     {"zonotopes", o.zonotopes}, {"costs", o.costs}, {"p_agg", o.p_agg},
          {"eps", o.eps},           {"h", o.h},             {"a", o.a}};
}

std::vector<double> parse_eta_grid(const std::string& s) {
  if (s.empty()) {
    std::vector<double> grid;
    for (int k = 0; k <= 10; ++k) grid.push_back(0.1 * k);
    return grid;
  }
  std::vector<double> grid;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      grid.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("--eta-grid: '" + item + "' is not a number");
    }
  }
  return grid;
}

FleetScenario load_scenario(const Options& o) {
  if (o.scenario.empty()) throw ConfigError("--scenario is required for this command");
  return io::scenario_from_json(io::read_json(o.scenario));
}

SubgradientParams params_from(const Options& o) {
  SubgradientParams p;
  p.eps = o.eps;
  p.h = o.h;
  p.a = o.a;
  p.validate();
  return p;
}

std::vector<Zonotope> zonotopes_for(const Options& o, const FleetScenario& sc, unsigned threads, RunReport& report) {
  if (!o.zonotopes.empty()) {
    auto zs = io::zonotopes_from_json(io::read_json(o.zonotopes));
    if (zs.size() != sc.specs.size()) throw ConfigError("zonotope file and scenario differ in system count");
    return zs;
  }
  const auto t0 = suites::Clock::now();
  auto f = suites::fit_fleet(sc, threads, false);
  report.phase("fit", suites::seconds_since(t0));
  return f.zonotopes;
}

std::vector<SystemCost> costs_for(const Options& o, const std::vector<Zonotope>& zs, double t_s, bool zero_default) {
  if (!o.costs.empty()) {
    const auto specs = io::costs_from_json(io::read_json(o.costs));
    if (specs.size() != zs.size()) throw ConfigError("cost file and zonotopes differ in system count");
    std::vector<SystemCost> costs;
    for (std::size_t j = 0; j < zs.size(); ++j) costs.push_back(io::system_cost(specs[j], zs[j], t_s));
    return costs;
  }
  if (!zero_default) return random_linear_costs(zs, suites::derive_seed(o.seed, 0xC057));
  std::vector<SystemCost> costs;
  for (const auto& z : zs) {
    std::vector<PwlComponent> flex;
    for (Index i = 0; i < z.g(); ++i) flex.push_back(PwlComponent::linear(0.0, z.betabar[i]));
    costs.push_back(flexibility_only(flex));
  }
  return costs;
}

// fit

int cmd_fit(const Options& o) {
  const unsigned threads = thread_count(o);
  RunReport report("fit", config_json(o, threads));
  const fs::path out(o.out);
  FleetScenario sc;
  if (o.scenario.empty()) {
    PevRanges r;
    if (o.trips) r.max_trips = 2;
    sc = sample_fleet(o.count, r, o.horizon, o.step_hours, o.seed, threads);
    io::write_json(out / "scenario.json", io::to_json(sc));
    report.artifact(out / "scenario.json");
  } else {
    sc = load_scenario(o);
  }
  const auto t0 = suites::Clock::now();
  const auto f = suites::fit_fleet(sc, threads);
  report.phase("fit", suites::seconds_since(t0));
  io::write_json(out / "zonotopes.json", io::to_json(f.zonotopes));
  io::write_json(out / "boxes.json", io::to_json(f.boxes));
  std::ostringstream csv;
  csv << "system_id,lambda_z,lambda_b,fit_seconds\n";
  for (std::size_t j = 0; j < f.zonotopes.size(); ++j)
    csv << j << "," << io::fmt(f.lambda_z[j]) << "," << io::fmt(f.lambda_b[j]) << "," << io::fmt(f.fit_seconds[j]) << "\n";
  io::write_atomic(out / "fit_report.csv", csv.str());
  for (const char* name : {"zonotopes.json", "boxes.json", "fit_report.csv"}) report.artifact(out / name);
  std::size_t dominated = 0;
  for (std::size_t j = 0; j < f.zonotopes.size(); ++j) dominated += f.lambda_z[j] < f.lambda_b[j];
  report.metrics() = {{"systems", f.zonotopes.size()},
                      {"mean_lambda_z", suites::mean(f.lambda_z)},
                      {"mean_lambda_b", suites::mean(f.lambda_b)},
                      {"systems_with_lambda_z_below_lambda_b", dominated}};
  report.write(out);
  std::cout << "fit: " << f.zonotopes.size() << " systems, mean Lambda_Z " << suites::mean(f.lambda_z)
            << ", mean Lambda_B " << suites::mean(f.lambda_b) << "\n";
  return kExitOk;
}

// aggregate

int cmd_aggregate(const Options& o) {
  const unsigned threads = thread_count(o);
  RunReport report("aggregate", config_json(o, threads));
  if (o.inputs.empty()) throw ConfigError("aggregate: give one or more zonotope files");
  std::vector<Zonotope> zs;
  for (const auto& path : o.inputs) {
    auto part = io::zonotopes_from_json(io::read_json(path));
    zs.insert(zs.end(), part.begin(), part.end());
  }
  const auto t0 = suites::Clock::now();
  const Zonotope agg = minkowski_sum(zs);
  report.phase("sum", suites::seconds_since(t0));
  const fs::path out(o.out);
  io::write_json(out / "aggregate.json", io::to_json(agg));
  report.artifact(out / "aggregate.json");
  report.metrics() = {{"systems", zs.size()}, {"N", agg.N()}, {"family", to_string(agg.family)}};
  report.write(out);
  std::cout << "aggregate: " << zs.size() << " zonotopes summed\n";
  return kExitOk;
}

// disaggregate

int cmd_disaggregate(const Options& o) {
  const unsigned threads = thread_count(o);
  RunReport report("disaggregate", config_json(o, threads));
  const fs::path out(o.out);
  const FleetScenario sc = load_scenario(o);
  const auto zs = zonotopes_for(o, sc, threads, report);
  const auto costs = costs_for(o, zs, sc.t_s, false);
  VectorXd p_agg;
  if (!o.p_agg.empty()) {
    p_agg = io::read_vector_csv(o.p_agg, "step,p_agg_kw");
    if (p_agg.size() != sc.N) throw LengthMismatch("p_agg has " + std::to_string(p_agg.size()) + " steps, scenario has " + std::to_string(sc.N));
  } else {
    p_agg = suites::sample_target(zs, suites::derive_seed(o.seed, 0x7A6E7));
    io::write_atomic(out / "p_agg.csv", io::vector_csv(p_agg, "step,p_agg_kw"));
    report.artifact(out / "p_agg.csv");
  }
  const auto t0 = suites::Clock::now();
  const AggregateCost ac = merge_aggregate_cost(costs, threads);
  report.phase("merge", suites::seconds_since(t0));
  const auto res = disaggregate(p_agg, zs, ac, params_from(o), threads);
  report.phase("subgradient", res.subgradient_seconds);
  report.phase("distribution", res.distribution_seconds);
  const auto inv = check_invariants(res, zs, p_agg);
  json m = {{"systems", zs.size()},
            {"N", sc.N},
            {"objective", res.objective},
            {"iterations", res.iterations},
            {"hit_max_iters", res.hit_max_iters},
            {"beta_agg", io::to_json(res.beta_agg_star)},
            {"history", res.history},
            {"invariants",
             {{"beta_sum_error", inv.beta_sum_error},
              {"trajectory_sum_error", inv.trajectory_sum_error},
              {"membership_violations", inv.membership_violations}}}};
  if (o.oracle) {
    const auto t1 = suites::Clock::now();
    const auto lp = disaggregate_lp_oracle(p_agg, zs, costs);
    report.phase("oracle", suites::seconds_since(t1));
    m["oracle_objective"] = lp.objective;
    m["gap"] = relative_gap(res.objective, lp.objective);
  }
  io::write_atomic(out / "trajectories.csv", io::trajectories_csv(res.trajectories));
  io::write_json(out / "result.json", m);
  report.artifact(out / "trajectories.csv");
  report.artifact(out / "result.json");
  report.metrics() = m;
  report.write(out);
  std::cout << "disaggregate: objective " << res.objective << " after " << res.iterations << " iterations";
  if (o.oracle) std::cout << ", gap " << m["gap"].get<double>();
  std::cout << "\n";
  return kExitOk;
}

// bidcurve

int cmd_bidcurve(const Options& o) {
  const unsigned threads = thread_count(o);
  RunReport report("bidcurve", config_json(o, threads));
  const fs::path out(o.out);
  const FleetScenario sc = load_scenario(o);
  if (o.prices.empty()) throw ConfigError("bidcurve: --prices is required");
  const PriceSeries prices = load_prices(o.prices, sc.N);
  const std::vector<double> grid = parse_eta_grid(o.eta_grid);
  const auto t0 = suites::Clock::now();
  suites::FittedFleet f;
  if (o.zonotopes.empty()) {
    f = suites::fit_fleet(sc, threads, o.oracle);
  } else {
    f.zonotopes = zonotopes_for(o, sc, threads, report);
    f.polytopes = scenario_polytopes(sc);
  }
  report.phase("fit", suites::seconds_since(t0));
  const auto costs = costs_for(o, f.zonotopes, sc.t_s, true);
  const auto t1 = suites::Clock::now();
  const BidCurve curve =
      bid_curve(f.zonotopes, merge_aggregate_cost(costs, threads), prices.values, sc.t_s, grid, params_from(o), threads);
  report.phase("bidcurve", suites::seconds_since(t1));
  std::ostringstream csv;
  csv << "eta,r_kw,baseline_cost_eur,offer_cost_eur\n";
  for (const auto& p : curve.points)
    csv << io::fmt(p.eta) << "," << io::fmt(p.r) << "," << io::fmt(p.baseline_cost) << "," << io::fmt(p.offer_cost) << "\n";
  io::write_atomic(out / "bidcurve.csv", csv.str());
  report.artifact(out / "bidcurve.csv");
  json m = {{"systems", f.zonotopes.size()}, {"r_max_kw", curve.r_max}, {"prices", prices.source}};
  constexpr std::size_t kOracleVariables = 20000;
  if (o.oracle) {
    if (!o.costs.empty()) {
      m["comparison"] = "skipped: the polytope oracle supports energy prices only (no --costs)";
    } else if (f.boxes.empty()) {
      m["comparison"] = "skipped: needs fitted boxes (no --zonotopes)";
    } else if (f.polytopes.size() * static_cast<std::size_t>(2 * sc.N) > kOracleVariables) {
      m["comparison"] = "skipped: instance too large for the polytope LP";
    } else {
      std::vector<double> fractions;
      for (double e : grid) fractions.push_back(e);
      const auto t2 = suites::Clock::now();
      const auto rows = suites::compare_families(f, prices.values, sc.t_s, fractions, params_from(o));
      report.phase("comparison", suites::seconds_since(t2));
      std::ostringstream cmp;
      cmp << "r_kw,polytope_eur,zonotope_eur,box_eur,zonotope_exact_eur,box_exact_eur\n";
      std::size_t violations = 0;
      for (const auto& r : rows) {
        cmp << io::fmt(r.r) << "," << io::fmt(r.poly) << "," << io::fmt(r.zono) << "," << io::fmt(r.box) << ","
            << io::fmt(r.zono_exact) << "," << io::fmt(r.box_exact) << "\n";
        violations += !(r.poly <= r.zono + 1e-6 && r.zono <= r.box + 1e-6);
      }
      io::write_atomic(out / "comparison.csv", cmp.str());
      report.artifact(out / "comparison.csv");
      m["ordering_violations"] = violations;
    }
  }
  report.metrics() = m;
  report.write(out);
  std::cout << "bidcurve: " << curve.points.size() << " points, r_max " << curve.r_max << " kW\n";
  return kExitOk;
}

// bench

json lambda_json(const suites::LambdaSuite& s) {
  return {{"mean_lambda_z", s.mean_z}, {"mean_lambda_b", s.mean_b}, {"dominance_violations", s.dominance_violations},
          {"seconds", s.seconds}};
}

int cmd_bench(const Options& o) {
  const unsigned threads = thread_count(o);
  const std::string profile = o.profile.empty() ? "all" : o.profile;
  const std::vector<std::string> known = {"lambda", "gap", "scaling", "ordering", "all"};
  if (std::find(known.begin(), known.end(), profile) == known.end())
    throw ConfigError("unknown profile '" + profile + "' (expected lambda, gap, scaling, ordering or all)");
  RunReport report("bench", config_json(o, threads));
  const fs::path out(o.out);
  std::ostringstream summary;
  const bool all = profile == "all";
  json m = json::object();
  if (all || profile == "lambda") {
    const auto s = suites::run_lambda(o.seed, threads);
    std::ostringstream csv;
    csv << "system_id,lambda_z,lambda_b,fit_seconds\n";
    for (std::size_t j = 0; j < s.fleet.lambda_z.size(); ++j)
      csv << j << "," << io::fmt(s.fleet.lambda_z[j]) << "," << io::fmt(s.fleet.lambda_b[j]) << ","
          << io::fmt(s.fleet.fit_seconds[j]) << "\n";
    io::write_atomic(out / "lambda.csv", csv.str());
    report.artifact(out / "lambda.csv");
    report.phase("lambda", s.seconds);
    m["lambda"] = lambda_json(s);
    summary << "lambda: 100 PEVs, N=12, t_s=2 h: mean Lambda_Z " << s.mean_z << ", mean Lambda_B " << s.mean_b
            << ", systems with Lambda_Z < Lambda_B: " << s.dominance_violations << "\n";
  }
  if (all || profile == "gap") {
    const auto s = suites::run_gap(o.seed, 20, {10, 100, 1000}, threads);
    std::ostringstream csv;
    csv << "J,seed,objective,oracle,gap,iterations,subgradient_seconds,oracle_seconds,sum_error,membership_violations\n";
    for (const auto& r : s.runs)
      csv << r.J << "," << r.seed << "," << io::fmt(r.value) << "," << io::fmt(r.oracle) << "," << io::fmt(r.gap) << ","
          << r.iterations << "," << io::fmt(r.subgradient_seconds) << "," << io::fmt(r.oracle_seconds) << ","
          << io::fmt(r.invariants.trajectory_sum_error) << "," << r.invariants.membership_violations << "\n";
    io::write_atomic(out / "gap.csv", csv.str());
    report.artifact(out / "gap.csv");
    report.phase("gap", s.seconds);
    m["gap"] = {{"worst_gap", s.worst_gap}, {"invariant_violations", s.invariant_violations},
                {"worst_sum_error", s.worst_sum_error}, {"pool_fit_seconds", s.pool_fit_seconds}, {"seconds", s.seconds}};
    summary << "gap: J in {10,100,1000}, N=24, 20 seeds: worst gap " << s.worst_gap << ", invariant violations "
            << s.invariant_violations << "\n";
  }
  if (all || profile == "scaling") {
    const auto s = suites::run_scaling(o.seed, {1000, 10000}, 3, threads);
    std::ostringstream csv;
    csv << "J,subgradient_seconds,distribution_seconds,setup_seconds,iterations\n";
    for (const auto& r : s.runs)
      csv << r.J << "," << io::fmt(r.subgradient_seconds) << "," << io::fmt(r.distribution_seconds) << ","
          << io::fmt(r.setup_seconds) << "," << r.iterations << "\n";
    io::write_atomic(out / "scaling.csv", csv.str());
    report.artifact(out / "scaling.csv");
    report.phase("scaling", s.seconds);
    m["scaling"] = {{"median_subgradient_seconds", s.median_subgradient}, {"ratio", s.ratio},
                    {"invariant_violations", s.invariant_violations}, {"seconds", s.seconds}};
    summary << "scaling: N=96, subgradient time J=1e4 over J=1e3: " << s.ratio << "x\n";
  }
  if (all || profile == "ordering") {
    const std::string price_path = o.prices.empty() ? std::string(FLEXPOOL_DATA_DIR) + "/prices_sample.csv" : o.prices;
    const auto s = suites::run_ordering(o.seed, load_prices(price_path, 6).values, 10, threads);
    std::ostringstream csv;
    csv << "fleet,fraction,r_kw,polytope_eur,zonotope_eur,box_eur,zonotope_exact_eur,box_exact_eur,offer_eur\n";
    for (const auto& r : s.rows)
      csv << r.fleet << "," << io::fmt(r.fraction) << "," << io::fmt(r.r) << "," << io::fmt(r.poly) << ","
          << io::fmt(r.zono) << "," << io::fmt(r.box) << "," << io::fmt(r.zono_exact) << "," << io::fmt(r.box_exact)
          << "," << io::fmt(r.offer) << "\n";
    io::write_atomic(out / "ordering.csv", csv.str());
    report.artifact(out / "ordering.csv");
    report.phase("ordering", s.seconds);
    m["ordering"] = {{"polytope_above_zonotope", s.poly_violations}, {"zonotope_above_box", s.box_violations},
                     {"offer_decreases", s.offer_violations}, {"exact_ordering_violations", s.exact_violations},
                     {"worst_zonotope_excess_over_exact", s.worst_zono_excess}, {"prices", price_path},
                     {"seconds", s.seconds}};
    summary << "ordering: 10 fleets, J=10, N=6: polytope > zonotope " << s.poly_violations << ", zonotope > box "
            << s.box_violations << ", offer decreases " << s.offer_violations << "\n";
  }
  io::write_atomic(out / "summary.txt", summary.str());
  report.artifact(out / "summary.txt");
  report.metrics() = m;
  report.write(out);
  std::cout << summary.str();
  return kExitOk;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--scenario", o.scenario, "Scenario JSON file");
  sub->add_option("--prices", o.prices, "Price CSV (step,price_eur_per_kwh)");
  sub->add_option("--out", o.out, "Output directory")->capture_default_str();
  sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  sub->add_option("--eta-grid", o.eta_grid, "Comma-separated reservation shares in [0, 1]");
  sub->add_flag("--oracle", o.oracle, "Also run the exact LP comparison");
  sub->add_option("--profile", o.profile, "bench profile: lambda, gap, scaling, ordering, all");
  sub->add_option("--threads", o.threads, "Worker threads (default: FLEXPOOL_THREADS or 1)")->check(CLI::PositiveNumber);
}

void add_solver(CLI::App* sub, Options& o) {
  sub->add_option("--zonotopes", o.zonotopes, "Zonotope set JSON (default: fit the scenario)");
  sub->add_option("--costs", o.costs, "Cost JSON, one entry per system");
  sub->add_option("--eps", o.eps, "Relative improvement threshold")->capture_default_str();
  sub->add_option("--window", o.h, "Termination window h")->capture_default_str();
  sub->add_option("--step", o.a, "Step numerator a (0: default)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flexpool: zonotope flexibility aggregation for distributed energy resources"};
  app.require_subcommand(1);
  Options o;
  auto* fit = app.add_subcommand("fit", "Fit zonotopes and boxes to every system of a scenario");
  add_common(fit, o);
  fit->add_option("--count", o.count, "Systems to sample when no scenario is given")->capture_default_str();
  fit->add_option("--horizon", o.horizon, "Steps N when sampling")->capture_default_str();
  fit->add_option("--step-hours", o.step_hours, "Step length t_s in hours when sampling")->capture_default_str();
  fit->add_flag("--trips", o.trips, "Sample trip windows");
  auto* agg = app.add_subcommand("aggregate", "Minkowski sum of zonotope files");
  add_common(agg, o);
  agg->add_option("inputs", o.inputs, "Zonotope JSON files")->required();
  auto* dis = app.add_subcommand("disaggregate", "Split an aggregate trajectory at minimum cost");
  add_common(dis, o);
  add_solver(dis, o);
  dis->add_option("--p-agg", o.p_agg, "Aggregate trajectory CSV (step,p_agg_kw); default: sampled from --seed");
  auto* bid = app.add_subcommand("bidcurve", "Regulation bid curve over a reservation grid");
  add_common(bid, o);
  add_solver(bid, o);
  auto* bench = app.add_subcommand("bench", "Canned experiment suites");
  add_common(bench, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (fit->parsed()) return cmd_fit(o);
    if (agg->parsed()) return cmd_aggregate(o);
    if (dis->parsed()) return cmd_disaggregate(o);
    if (bid->parsed()) return cmd_bidcurve(o);
    return cmd_bench(o);
  } catch (const InfeasibleTarget& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const EmptyPolytope& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const EmptyIntersection& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const EmptyRemainder& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const UnboundedError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}
