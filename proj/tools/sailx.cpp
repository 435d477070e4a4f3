#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sailx/experiment.hpp"

namespace {

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  int trials = 0;
  int jobs = 0;
  int trial = 0;
  std::string out;
  std::string method;
  std::vector<double> c_values;
  std::string demos;
  std::vector<std::string> inputs;
  bool seed_given = false;
};

void set_log_level() {
  const char* env = std::getenv("SAILX_LOG");
  spdlog::set_level(spdlog::level::warn);
  if (env && *env) spdlog::set_level(spdlog::level::from_str(env));
}

sailx::ExperimentConfig resolve(const Options& o, CLI::App& app) {
  sailx::ExperimentConfig cfg = o.config.empty() ? sailx::ExperimentConfig{} : sailx::load_config(o.config);
  if (app.count("--seed")) cfg.seed = o.seed;
  if (app.count("--trials")) cfg.trials = o.trials;
  if (app.count("--jobs")) cfg.jobs = o.jobs;
  if (app.count("--c-values")) cfg.c_values = o.c_values;
  if (app.count("--method") && o.method.find(',') == std::string::npos) {
    cfg.method = sailx::parse_method(o.method);
  }
  cfg.validate();
  return cfg;
}

std::vector<sailx::Method> methods_of(const std::string& text, const std::string& fallback) {
  std::vector<sailx::Method> out;
  std::stringstream ss(text.empty() ? fallback : text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(sailx::parse_method(item));
  return out;
}

// Writes to --out when given, else stdout.
template <typename F>
void emit(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  write(f);
}

}  // namespace

int main(int argc, char** argv) {
  set_log_level();
  CLI::App app{"Speed-adaptive chunked policy execution: simulation and experiments"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "base seed");
    sub->add_option("--trials", o.trials, "trials per grid point")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output file (default stdout)");
    sub->add_option("--method", o.method, "sail, dp, dp-fast, agg-actions, replay (comma list for sweeps)");
    sub->add_option("--c-values", o.c_values, "speed factors")->delimiter(',');
    sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* gen = app.add_subcommand("gen-demos", "generate scripted demonstrations");
  auto* label = app.add_subcommand("label", "add critical-action labels to a demo file");
  auto* rollout = app.add_subcommand("rollout", "run one closed-loop rollout and write its log");
  auto* metrics = app.add_subcommand("metrics", "score rollout logs");
  auto* diag = app.add_subcommand("diagnose", "out-of-distribution scores of conditioning tails");
  auto* speed = app.add_subcommand("sweep-speed", "TPR versus speed factor");
  auto* gain = app.add_subcommand("sweep-gain-replay", "demo replay across speeds, gains and targets");
  auto* noise = app.add_subcommand("sweep-noise", "replay under reference noise for both gains");
  auto* rep = app.add_subcommand("report", "per-method summary of a sweep-speed CSV");
  for (auto* s : {gen, label, rollout, metrics, diag, speed, gain, noise, rep}) common(s);
  label->add_option("input", o.inputs, "demo file")->required()->expected(1);
  metrics->add_option("inputs", o.inputs, "rollout files")->required();
  metrics->add_option("--demos", o.demos, "demo file for the speedup-over-demo column");
  rep->add_option("input", o.inputs, "sweep CSV")->required()->expected(1);
  rollout->add_option("--trial", o.trial, "trial index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const sailx::ExperimentConfig cfg = resolve(o, *sub);
    if (sub == gen) {
      const auto demos = sailx::generate_demos(cfg.task, cfg.demos, cfg.seed, cfg.script);
      emit(o.out, [&](std::ostream& f) { sailx::write_demos(f, demos); });
    } else if (sub == label) {
      auto demos = sailx::read_demos(o.inputs.front());
      for (auto& d : demos) {
        std::vector<sailx::Pose> cmd;
        for (const auto& r : d.records) cmd.push_back(r.commanded);
        const auto k = sailx::label_critical(cmd, cfg.labels);
        for (std::size_t i = 0; i < k.size(); ++i) d.records[i].k = k[i];
      }
      emit(o.out, [&](std::ostream& f) { sailx::write_demos(f, demos); });
    } else if (sub == rollout) {
      const auto m = o.method.empty() ? cfg.method : sailx::parse_method(o.method);
      const auto library = sailx::build_library(cfg);
      const auto log = sailx::run_method_trial(cfg, library, m, cfg.c_values.front(), o.trial);
      spdlog::info("rollout success={} duration={:.3f} stalls={}", log.success, log.duration, log.stall_count);
      emit(o.out, [&](std::ostream& f) { sailx::write_rollout(f, log); });
    } else if (sub == metrics) {
      std::vector<sailx::RolloutLog> logs;
      for (const auto& p : o.inputs) logs.push_back(sailx::read_rollout(p));
      const double demo_len = o.demos.empty() ? 0.0 : sailx::mean_demo_duration(sailx::read_demos(o.demos));
      emit(o.out, [&](std::ostream& f) {
        sailx::metrics_csv(logs, o.inputs, demo_len, cfg.policy.horizon_condition, f);
      });
    } else if (sub == diag) {
      emit(o.out, [&](std::ostream& f) { sailx::diagnose(cfg, f); });
    } else if (sub == speed) {
      const auto methods = methods_of(o.method, "sail,dp-fast");
      emit(o.out, [&](std::ostream& f) { sailx::sweep_speed(cfg, methods, f); });
    } else if (sub == gain) {
      emit(o.out, [&](std::ostream& f) { sailx::sweep_gain_replay(cfg, f); });
    } else if (sub == noise) {
      emit(o.out, [&](std::ostream& f) { sailx::sweep_noise(cfg, f); });
    } else if (sub == rep) {
      std::ifstream in(o.inputs.front());
      if (!in) throw std::runtime_error("cannot open " + o.inputs.front());
      emit(o.out, [&](std::ostream& f) { sailx::report(in, f); });
    }
  } catch (const sailx::ConfigError& e) {
    std::cerr << "sailx: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "sailx: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
