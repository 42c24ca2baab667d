// bciassist: planner, headless simulation, benchmarks and the gateway service.

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "bciassist/command_channel.hpp"
#include "bciassist/evaluation.hpp"
#include "bciassist/gateway.hpp"
#include "bciassist/motion_planner.hpp"
#include "bciassist/perception_sim.hpp"
#include "bciassist/planner.hpp"
#include "bciassist/simulator.hpp"

namespace fs = std::filesystem;
using namespace bciassist;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + p.string());
  out << text;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_argument, "not an integer list: " + s);
    }
  }
  return out;
}

// ---- plan -----------------------------------------------------------------------

struct PlanArgs {
  std::string domain, problem;
  bool json = false;
};

int cmd_plan(const PlanArgs& a) {
  const auto domain = pddl::parse_domain(read_text(a.domain));
  const auto problem = pddl::parse_problem(read_text(a.problem), domain);
  const auto r = planner::plan(domain, problem);
  if (a.json) {
    std::cout << planner::plan_to_json(r.plan, &r) << "\n";
  } else if (r.found()) {
    std::cout << planner::plan_to_text(r.plan);
  } else {
    std::cerr << "no plan: " << planner::to_string(r.status) << "\n";
  }
  return r.found() ? 0 : 2;
}

// ---- run ------------------------------------------------------------------------

struct RunArgs {
  std::string scenario = "fetch_and_carry";
  std::string goal;
  std::optional<double> error_rate;
  std::size_t runs = 1;
  std::uint64_t seed = 1;
  std::string out;
  std::string matrix;
  std::string outcomes;
  std::optional<std::size_t> retries;
  bool motion = false;
  bool fixed_placements = false;
};

int cmd_run(const RunArgs& a) {
  const auto sc = std::make_shared<const Scenario>(load_scenario(resolve_scenario_path(a.scenario)));
  RunOptions o;
  o.config = SimConfig::from_scenario(*sc);
  if (a.error_rate) o.config.channel.error_rate = *a.error_rate;
  if (!a.matrix.empty()) o.config.channel.custom_matrix = ConfusionMatrix::load(a.matrix);
  if (!a.outcomes.empty()) o.config.outcomes = OutcomeModel::preset(a.outcomes);
  if (a.retries) o.config.mission.retries = *a.retries;
  o.config.motion = a.motion;
  o.config.randomize = !a.fixed_placements;
  o.goal_spec = a.goal.empty() ? (sc->goals.empty() ? "" : sc->goals.front()) : a.goal;
  if (o.goal_spec.empty()) throw Error(ErrorCode::invalid_argument, "no goal given and none in the scenario");

  const auto runs = simulate_batch(sc, o, a.runs, a.seed);
  const auto ms = run_metrics(runs);
  std::vector<std::map<std::string, ActionStats>> stats;
  std::size_t done = 0, aborted = 0, unselected = 0;
  for (const auto& r : runs) {
    stats.push_back(r.stats);
    if (!r.selected) {
      ++unselected;
    } else if (r.status == SessionStatus::done) {
      ++done;
    } else {
      ++aborted;
    }
  }
  const auto merged = merge_stats(stats);

  std::cout << "scenario " << sc->name << ", goal \"" << o.goal_spec << "\", " << a.runs << " runs, seed "
            << a.seed << "\n\n";
  if (!ms.empty()) std::cout << format_table(aggregate(ms)) << "\n";
  std::cout << format_action_table(merged) << "\n";
  std::cout << "completed " << done << ", aborted " << aborted;
  if (unselected) std::cout << ", goal selection unfinished " << unselected;
  std::cout << "\n";

  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "metrics.csv", metrics_csv(ms));
    json j;
    j["scenario"] = sc->name;
    j["goal"] = o.goal_spec;
    j["runs"] = a.runs;
    j["seed"] = a.seed;
    j["error_rate"] = o.config.channel.error_rate;
    if (!ms.empty()) j["aggregate"] = to_json(aggregate(ms));
    j["actions"] = to_json(merged);
    j["completed"] = done;
    j["aborted"] = aborted;
    j["selection_unfinished"] = unselected;
    json per_run = json::array();
    for (const auto& r : runs) {
      json rj;
      rj["seed"] = r.log.seed;
      rj["status"] = r.selected ? to_string(r.status) : "selection_unfinished";
      rj["goal_reached"] = r.goal_reached;
      rj["end_time"] = r.end_time;
      if (r.metrics) rj["metrics"] = to_json(*r.metrics);
      if (r.pour) rj["pour_error_mm"] = 1000.0 * r.pour->final_error;
      per_run.push_back(rj);
    }
    j["per_run"] = per_run;
    write_text(fs::path(a.out) / "metrics.json", j.dump(2) + "\n");
    std::ofstream logs(fs::path(a.out) / "runs.ndjson", std::ios::binary);
    for (const auto& r : runs) write_ndjson(r.log, logs);
    write_text(fs::path(a.out) / "actions.txt", format_action_table(merged));
  }
  return 0;
}

// ---- bench ----------------------------------------------------------------------

struct BenchArgs {
  std::string scenario = "fetch_and_carry";
  std::size_t seeds = 10;
  std::uint64_t seed = 1;
  std::size_t iterations = 0;
  std::string from = "omnirob";
  std::string to = "shelf1";
  std::string out;
};

int cmd_bench_motion(const BenchArgs& a) {
  const auto sc = load_scenario(resolve_scenario_path(a.scenario));
  const auto ws = Workspace::from_json(sc.workspace);
  const auto pose_of = [&](const std::string& id) {
    for (const auto& o : sc.objects) {
      if (o.id == id && o.placement) return o.placement->pose;
    }
    throw Error(ErrorCode::not_found, "no pose for '" + id + "'");
  };
  const Pose2D start = pose_of(a.from), goal = pose_of(a.to);
  RrtConfig cfg;
  if (a.iterations) cfg.max_iterations = a.iterations;

  std::ostringstream csv;
  csv << "seed,first_cost,final_cost,iterations_to_first,iterations,waypoints,millis\n";
  std::size_t violations = 0;
  for (std::size_t i = 0; i < a.seeds; ++i) {
    const std::uint64_t seed = derive_seed(a.seed, i);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = bi2rrt_star(start, goal, ws, cfg, seed);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    violations += r.final_cost > r.first_cost + 1e-9;
    csv << seed << ',' << std::setprecision(10) << r.first_cost << ',' << r.final_cost << ','
        << r.iterations_to_first << ',' << r.iterations << ',' << r.waypoints.size() << ','
        << std::setprecision(4) << ms << '\n';
  }
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    write_text(a.out, csv.str());
  }
  std::cerr << a.seeds << " seeds, straight line " << se2_distance(start, goal) << ", final > first in "
            << violations << " rows\n";
  return violations == 0 ? 0 : 1;
}

// ---- pour -----------------------------------------------------------------------

struct PourArgs {
  std::string scenario = "drinking";
  std::size_t runs = 100;
  std::uint64_t seed = 1;
  bool occluded = false;
};

int cmd_pour(const PourArgs& a) {
  const auto sc = load_scenario(resolve_scenario_path(a.scenario));
  json liquid = sc.liquid;
  if (a.occluded) liquid["occluded"] = true;
  const auto cfg = PourConfig::from_json(liquid);
  const auto s = pour_batch(cfg, a.runs, a.seed);
  std::cout << std::fixed << std::setprecision(2) << (a.occluded ? "occluded" : "clear view") << ", " << s.runs
            << " pours: level error " << s.mean_mm << " +- " << s.std_mm << " mm, mean |error| " << s.mean_abs_mm
            << " mm\n";
  return 0;
}

// ---- paradigm -------------------------------------------------------------------

struct ParadigmArgs {
  std::size_t trials = 10;
  std::uint64_t seed = 1;
  double error_rate = 0.0;
};

int cmd_paradigm(const ParadigmArgs& a) {
  const auto trials = paradigm_schedule(a.trials, ConfusionMatrix::symmetric(a.error_rate), a.seed);
  std::cout << "task,cue_onset,cue_end,marker_onset,marker_end,performed\n" << std::setprecision(6);
  for (const auto& t : trials) {
    std::cout << to_string(t.task) << ',' << t.cue_onset << ',' << t.cue_end << ',' << t.marker_onset << ','
              << t.marker_end << ',' << to_string(t.performed) << '\n';
  }
  return 0;
}

// ---- permtest -------------------------------------------------------------------

struct PermArgs {
  std::string labels, predictions;
  std::size_t k = 100000;
  std::uint64_t seed = 1;
};

int cmd_permtest(const PermArgs& a) {
  const auto r = permutation_test(parse_ints(a.labels), parse_ints(a.predictions), a.k, a.seed);
  std::cout << "accuracy " << r.observed_accuracy << ", " << format_significance(r.p_value) << " ("
            << (r.exact ? "exact, " : "monte carlo, ") << r.permutations << " permutations)\n";
  return 0;
}

// ---- serve ----------------------------------------------------------------------

struct ServeArgs {
  std::string scenario = "fetch_and_carry";
  std::uint64_t seed = 1;
  std::string bind;
};

int cmd_serve(const ServeArgs& a) {
  auto [host, port] = bind_address_from_env();
  if (!a.bind.empty()) {
    ::setenv("BCISIM_BIND", a.bind.c_str(), 1);
    std::tie(host, port) = bind_address_from_env();
  }
  Gateway gw({a.scenario, a.seed});
  HttpServer http(gw);
  std::cerr << "listening on " << host << ":" << port << "\n";
  if (!http.listen(host, port)) {
    std::cerr << "cannot bind " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BCI-controlled robotic assistant simulator"};
  app.require_subcommand(1);

  PlanArgs plan_args;
  auto* plan = app.add_subcommand("plan", "plan a PDDL problem (text, or JSON with --json)");
  plan->add_option("domain", plan_args.domain, "domain file")->required()->check(CLI::ExistingFile);
  plan->add_option("problem", plan_args.problem, "problem file")->required()->check(CLI::ExistingFile);
  plan->add_flag("--json", plan_args.json, "machine-readable output");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "headless sessions with the scripted user");
  run->add_option("--scenario", run_args.scenario, "scenario file or bundled name")->capture_default_str();
  run->add_option("--goal", run_args.goal, "goal spec, e.g. \"put cup(content=water) table\"");
  run->add_option("--error-rate", run_args.error_rate, "channel error rate (overrides the scenario)")
      ->check(CLI::Range(0.0, 1.0));
  run->add_option("--runs", run_args.runs, "number of sessions")->capture_default_str();
  run->add_option("--seed", run_args.seed, "master seed")->capture_default_str();
  run->add_option("--out", run_args.out, "output directory for metrics and logs");
  run->add_option("--matrix", run_args.matrix, "5x5 confusion matrix JSON")->check(CLI::ExistingFile);
  run->add_option("--outcomes", run_args.outcomes, "outcome preset: fetch_and_carry, drinking, ideal");
  run->add_option("--retries", run_args.retries, "repeats allowed per failed action");
  run->add_flag("--motion", run_args.motion, "run motion planning and perception for every action");
  run->add_flag("--fixed-placements", run_args.fixed_placements, "keep the scenario's object placements");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "benchmarks");
  bench->require_subcommand(1);
  auto* motion = bench->add_subcommand("motion", "base planner cost per seed (CSV)");
  motion->add_option("--seeds", bench_args.seeds, "number of seeds")->capture_default_str();
  motion->add_option("--seed", bench_args.seed, "master seed")->capture_default_str();
  motion->add_option("--scenario", bench_args.scenario)->capture_default_str();
  motion->add_option("--from", bench_args.from, "start object")->capture_default_str();
  motion->add_option("--to", bench_args.to, "goal location")->capture_default_str();
  motion->add_option("--iterations", bench_args.iterations, "planner iterations");
  motion->add_option("--out", bench_args.out, "CSV file (stdout when omitted)");

  PourArgs pour_args;
  auto* pour = app.add_subcommand("pour", "pouring error statistics");
  pour->add_option("--scenario", pour_args.scenario)->capture_default_str();
  pour->add_option("--runs", pour_args.runs)->capture_default_str();
  pour->add_option("--seed", pour_args.seed)->capture_default_str();
  pour->add_flag("--occluded", pour_args.occluded, "bottle blocks the view mid-pour");

  ParadigmArgs paradigm_args;
  auto* paradigm = app.add_subcommand("paradigm", "cued training schedule (CSV)");
  paradigm->add_option("--trials-per-class", paradigm_args.trials)->capture_default_str();
  paradigm->add_option("--seed", paradigm_args.seed)->capture_default_str();
  paradigm->add_option("--error-rate", paradigm_args.error_rate)->check(CLI::Range(0.0, 1.0));

  PermArgs perm_args;
  auto* perm = app.add_subcommand("permtest", "permutation test of a decoder's predictions");
  perm->add_option("--labels", perm_args.labels, "comma-separated labels")->required();
  perm->add_option("--predictions", perm_args.predictions, "comma-separated predictions")->required();
  perm->add_option("-k", perm_args.k, "random permutations when enumeration is too large")->capture_default_str();
  perm->add_option("--seed", perm_args.seed)->capture_default_str();

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "HTTP gateway (bind address from BCISIM_BIND)");
  serve->add_option("--scenario", serve_args.scenario, "default scenario")->capture_default_str();
  serve->add_option("--seed", serve_args.seed)->capture_default_str();
  serve->add_option("--bind", serve_args.bind, "host:port, overrides BCISIM_BIND");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan) return cmd_plan(plan_args);
    if (*run) return cmd_run(run_args);
    if (*motion) return cmd_bench_motion(bench_args);
    if (*pour) return cmd_pour(pour_args);
    if (*paradigm) return cmd_paradigm(paradigm_args);
    if (*perm) return cmd_permtest(perm_args);
    if (*serve) return cmd_serve(serve_args);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
