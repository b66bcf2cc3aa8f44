#include "aoisched/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "aoisched/bounds.hpp"
#include "aoisched/errors.hpp"
#include "aoisched/joint_dp.hpp"
#include "aoisched/plant_io.hpp"
#include "aoisched/report_io.hpp"
#include "aoisched/simulator.hpp"

namespace aoisched {

namespace {

struct Globals {
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;
  bool json = false;
};

struct PlantSource {
  std::string plants_file;
  int count = 4;
  PlantGenSpec gen;
  std::string convention = "recursion";

  void add_options(CLI::App* cmd) {
    auto* file = cmd->add_option("--plants", plants_file, "Plant ensemble JSON (from `gen`)");
    auto* cnt = cmd->add_option("--count", count, "Number of generated plants")->check(CLI::PositiveNumber);
    file->excludes(cnt);
    cnt->excludes(file);
    add_gen_options(cmd);
    cmd->add_option("--convention", convention, "Covariance-from-AoI relation: recursion | physical")
        ->check(CLI::IsMember({"recursion", "physical"}));
  }

  void add_gen_options(CLI::App* cmd) {
    cmd->add_option("--n", gen.n, "State dimension");
    cmd->add_option("--m", gen.m, "Measurement dimension");
    cmd->add_option("--rho-min", gen.rho_min, "Smallest spectral radius (> 1)");
    cmd->add_option("--rho-max", gen.rho_max, "Largest spectral radius");
    cmd->add_option("--p-min", gen.p_min, "Smallest channel success probability");
    cmd->add_option("--p-max", gen.p_max, "Largest channel success probability");
  }

  CovarianceConvention conv() const {
    return convention == "physical" ? CovarianceConvention::kPhysical : CovarianceConvention::kRecursion;
  }

  std::vector<PlantModel> load(std::uint64_t seed) const {
    if (!plants_file.empty()) {
      auto plants = load_plants(plants_file);
      for (const auto& p : plants) validate_plant(p);
      return plants;
    }
    validate_gen_spec(gen);
    return generate_ensemble(gen, count, seed);
  }
};

void emit(const Globals& g, const std::string& contents) {
  if (g.out.empty()) {
    std::cout << contents;
  } else {
    write_file_atomic(g.out, contents);
  }
}

std::vector<PolicySpec> parse_policies(const std::vector<std::string>& names, int voi_cap, int dp_cap) {
  std::vector<PolicySpec> out;
  for (const auto& list : names) {
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      PolicySpec ps = parse_policy(item);
      ps.voi_delta_cap = voi_cap;
      ps.dp_delta_cap = dp_cap;
      out.push_back(ps);
    }
  }
  if (out.empty()) throw ConfigError("at least one --policy is required");
  return out;
}

std::filesystem::path json_sibling(const std::string& out) {
  std::filesystem::path p(out);
  p.replace_extension(".json");
  if (p == std::filesystem::path(out)) p += ".mirror.json";
  return p;
}

std::string table_text(const std::vector<SweepRow>& rows, const std::string& kind) {
  std::ostringstream os;
  os << std::left << std::setw(14) << kind << std::setw(14) << "policy" << std::setw(16) << "mean_J"
     << std::setw(14) << "ci95" << std::setw(16) << "ns/decision" << "diverged\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(14) << r.sweep_value << std::setw(14) << r.policy << std::setw(16)
       << r.report.mean_J << std::setw(14) << r.report.ci95 << std::setw(16) << r.report.time_per_decision_ns
       << r.report.diverged_runs << "\n";
  }
  return os.str();
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"AoI-function Whittle-index sensor scheduling simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_option("--threads", g.threads, "Worker threads (default: AOI_SCHED_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "Output file (written atomically)");
  app.add_flag("--json", g.json, "Machine-readable JSON output only");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a random plant ensemble");
  PlantSource gen_src;
  gen->add_option("--count", gen_src.count, "Number of plants")->check(CLI::PositiveNumber);
  gen_src.add_gen_options(gen);

  // simulate / sweep share their options
  struct SimArgs {
    PlantSource src;
    std::vector<std::string> policies{"lightweight"};
    std::string metric = "trace";
    int M = 1;
    long horizon = 1000;
    long runs = 1000;
    long warmup = -1;
    std::string sweep;
    bool trajectory = false;
    int voi_cap = 100;
    int dp_cap = 25;
  };
  SimArgs sim_args, sweep_args;
  auto add_sim = [](CLI::App* cmd, SimArgs& a, bool sweep_required) {
    a.src.add_options(cmd);
    cmd->add_option("--policy", a.policies, "Policies (repeatable or comma separated)");
    cmd->add_option("--metric", a.metric, "aoi | trace | empirical")->check(CLI::IsMember({"aoi", "trace", "empirical"}));
    cmd->add_option("--M", a.M, "Channels per step")->check(CLI::PositiveNumber);
    cmd->add_option("--horizon", a.horizon, "Steps per run")->check(CLI::PositiveNumber);
    cmd->add_option("--runs", a.runs, "Independent runs")->check(CLI::PositiveNumber);
    cmd->add_option("--warmup", a.warmup, "Discarded prefix (default 10% of the horizon)");
    auto* sw = cmd->add_option("--sweep", a.sweep, "kind:lo:hi:count with kind = scale | heterogeneity | channel");
    if (sweep_required) sw->required();
    cmd->add_flag("--trajectory", a.trajectory, "Simulate full state trajectories");
    cmd->add_option("--voi-cap", a.voi_cap, "Truncation of the VoI-Whittle MDP")->check(CLI::Range(6, 100000));
    cmd->add_option("--delta-cap", a.dp_cap, "AoI cap of the DP policy")->check(CLI::Range(2, 1000));
  };
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo evaluation of scheduling policies");
  add_sim(simulate, sim_args, false);
  auto* sweep = app.add_subcommand("sweep", "Parameter sweep (scale, heterogeneity or channel)");
  add_sim(sweep, sweep_args, true);

  // bounds
  auto* bounds = app.add_subcommand("bounds", "Lower/upper bounds and stability verdicts");
  PlantSource bounds_src;
  int bounds_M = 1;
  bounds_src.add_options(bounds);
  bounds->add_option("--M", bounds_M, "Channels per step")->check(CLI::PositiveNumber);

  // dp
  auto* dp = app.add_subcommand("dp", "Lightweight policy versus the DP optimum on small instances");
  PlantSource dp_src;
  int dp_M = 1;
  int dp_cap = 25;
  std::string dp_cost = "aoi";
  std::string dp_grid;
  int dp_instances = 1;
  dp_src.add_options(dp);
  dp->add_option("--M", dp_M, "Channels per step (with --plants / --count)")->check(CLI::PositiveNumber);
  dp->add_option("--delta-cap", dp_cap, "AoI truncation of the joint chain")->check(CLI::Range(2, 1000));
  dp->add_option("--cost", dp_cost, "aoi | trace")->check(CLI::IsMember({"aoi", "trace"}));
  dp->add_option("--grid", dp_grid, "Comma separated MxN pairs, e.g. 1x2,1x3,2x3");
  dp->add_option("--instances", dp_instances, "Random instances per grid pair")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    int threads = g.threads;
    if (threads == 0) {
      if (const char* env = std::getenv("AOI_SCHED_THREADS")) {
        try {
          threads = std::stoi(env);
        } catch (const std::exception&) {
          throw ConfigError(std::string("AOI_SCHED_THREADS is not an integer: ") + env);
        }
        if (threads < 0) throw ConfigError("AOI_SCHED_THREADS must be >= 0");
      }
    }
    if (threads > 0) omp_set_num_threads(threads);

    if (gen->parsed()) {
      validate_gen_spec(gen_src.gen);
      const auto plants = generate_ensemble(gen_src.gen, gen_src.count, g.seed);
      emit(g, plants_to_json(plants).dump(2) + "\n");
      if (!g.out.empty() && !g.json) std::cerr << "wrote " << plants.size() << " plants to " << g.out << "\n";
      return kExitOk;
    }

    if (simulate->parsed() || sweep->parsed()) {
      SimArgs& a = simulate->parsed() ? sim_args : sweep_args;
      const auto policies = parse_policies(a.policies, a.voi_cap, a.dp_cap);
      SimConfig cfg;
      cfg.horizon = a.horizon;
      cfg.runs = a.runs;
      cfg.warmup = a.warmup;
      cfg.seed = g.seed;
      cfg.metric = parse_metric(a.metric);
      const bool trajectory = a.trajectory || cfg.metric == Metric::kEmpiricalSquaredError;
      if (trajectory && !a.sweep.empty()) throw ConfigError("--trajectory cannot be combined with --sweep");
      std::vector<SweepRow> rows;
      std::string kind = "none";
      if (!a.sweep.empty()) {
        SweepSpec spec = parse_sweep(a.sweep);
        kind = sweep_kind_name(spec.kind);
        spec.gen = a.src.gen;
        spec.N = a.src.count;
        spec.M = a.M;
        spec.plant_seed = g.seed;
        spec.convention = a.src.conv();
        std::vector<PlantModel> base;
        if (!a.src.plants_file.empty()) {
          if (spec.kind == SweepKind::kScale) throw ConfigError("a scale sweep generates its own plants; drop --plants");
          base = a.src.load(g.seed);
          spec.N = static_cast<int>(base.size());
        }
        rows = run_sweep(spec, policies, cfg, base);
      } else {
        const auto plants = a.src.load(g.seed);
        const auto sensors = std::make_shared<const std::vector<Sensor>>(
            make_sensors(plants, trajectory ? CovarianceConvention::kPhysical : a.src.conv()));
        for (const auto& ps : policies) {
          const Scheduler s(ps, sensors, a.M);
          rows.push_back({0.0, policy_name(ps.kind), trajectory ? run_trajectory_sim(s, cfg) : run_covariance_sim(s, cfg)});
        }
      }
      const auto js = sweep_json(rows, kind, cfg.metric);
      if (!g.out.empty()) {
        write_file_atomic(g.out, sweep_csv(rows));
        write_file_atomic(json_sibling(g.out), js.dump(2) + "\n");
      }
      if (g.json) {
        std::cout << js.dump(2) << "\n";
      } else {
        std::cout << table_text(rows, kind);
        if (!g.out.empty()) std::cout << "wrote " << g.out << " and " << json_sibling(g.out).string() << "\n";
      }
      long diverged = 0;
      for (const auto& r : rows) diverged += r.report.diverged_runs;
      if (diverged > 0) {
        std::cerr << "error: " << diverged << " run(s) diverged (trace above "
                  << cfg.divergence_threshold << ")\n";
        return kExitDiverged;
      }
      return kExitOk;
    }

    if (bounds->parsed()) {
      const auto sensors = make_sensors(bounds_src.load(g.seed), bounds_src.conv());
      const BoundsReport rep = compute_bounds(sensors, bounds_M);
      const std::string js = to_json(rep).dump(2) + "\n";
      if (!g.out.empty()) write_file_atomic(g.out, js);
      std::cout << (g.json ? js : summarize(rep));
      return kExitOk;
    }

    if (dp->parsed()) {
      std::vector<std::pair<int, int>> grid;
      if (!dp_grid.empty()) {
        std::stringstream ss(dp_grid);
        std::string item;
        while (std::getline(ss, item, ',')) {
          const auto x = item.find('x');
          try {
            if (x == std::string::npos) throw std::invalid_argument(item);
            grid.emplace_back(std::stoi(item.substr(0, x)), std::stoi(item.substr(x + 1)));
          } catch (const std::exception&) {
            throw ConfigError("invalid --grid entry '" + item + "' (expected MxN)");
          }
        }
        if (!dp_src.plants_file.empty()) throw ConfigError("--grid generates its own plants; drop --plants");
      }
      const DpCost cost = dp_cost == "trace" ? DpCost::kTraceOfP : DpCost::kAoiFunction;
      auto solve = [&](const std::vector<PlantModel>& plants, int M) {
        const auto sensors = make_sensors(plants, dp_src.conv());
        const DpInstance inst = make_dp_instance(sensors, M, dp_cap, cost);
        const DpSolution opt = dp_optimal_policy(inst);
        std::vector<AoiFunction> fns;
        for (const auto& s : sensors) fns.push_back(s.fn);
        const double ours = evaluate_policy_table(inst, lightweight_policy_table(inst, fns));
        return std::pair{ours, opt.table.average_cost};
      };
      nlohmann::json rows = nlohmann::json::array();
      std::ostringstream csv;
      csv << "M,N,ours,optimal,ratio\n";
      auto add_row = [&](int M, int N, double ours, double optimal, const nlohmann::json& per) {
        csv << M << "," << N << "," << std::setprecision(10) << ours << "," << optimal << "," << ours / optimal << "\n";
        rows.push_back({{"M", M}, {"N", N}, {"ours", ours}, {"optimal", optimal}, {"ratio", ours / optimal},
                        {"instances", per}});
      };
      if (grid.empty()) {
        const auto plants = dp_src.load(g.seed);
        const auto [ours, optimal] = solve(plants, dp_M);
        add_row(dp_M, static_cast<int>(plants.size()), ours, optimal, nlohmann::json::array());
      } else {
        validate_gen_spec(dp_src.gen);
        for (const auto& [M, N] : grid) {
          if (M < 1 || N < 1) throw ConfigError("grid pairs need M, N >= 1");
          double ours_sum = 0.0, opt_sum = 0.0, ratio_sum = 0.0;
          nlohmann::json per = nlohmann::json::array();
          for (int k = 0; k < dp_instances; ++k) {
            const std::uint64_t s = splitmix64(g.seed ^ (static_cast<std::uint64_t>(M) << 40) ^
                                               (static_cast<std::uint64_t>(N) << 20) ^ static_cast<std::uint64_t>(k));
            const auto [ours, optimal] = solve(generate_ensemble(dp_src.gen, N, s), M);
            ours_sum += ours;
            opt_sum += optimal;
            ratio_sum += ours / optimal;
            per.push_back({{"ours", ours}, {"optimal", optimal}, {"ratio", ours / optimal}});
          }
          const double n = dp_instances;
          add_row(M, N, ours_sum / n, opt_sum / n, per);
          rows.back()["mean_ratio"] = ratio_sum / n;
        }
      }
      nlohmann::json js{{"schema_version", 1}, {"cost", dp_cost}, {"delta_cap", dp_cap}, {"rows", rows}};
      if (!g.out.empty()) {
        write_file_atomic(g.out, csv.str());
        write_file_atomic(json_sibling(g.out), js.dump(2) + "\n");
      }
      std::cout << (g.json ? js.dump(2) + "\n" : csv.str());
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace aoisched
