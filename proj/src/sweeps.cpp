#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "sailx/diagnostics.hpp"
#include "sailx/experiment.hpp"

namespace sailx {

std::string format_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

// Compact per-trial result; full logs are dropped as soon as they are scored.
struct TrialSummary {
  bool success = false;
  double duration = 0.0;
  double t_max = 0.0;
  int stalls = 0;
  bool fault = false;
  RolloutMetrics metrics;
};

TrialSummary summarize(const RolloutLog& log, int h_c, double decay) {
  return {log.success, log.duration, log.t_max, log.stall_count, log.fault,
          rollout_metrics(log, h_c, decay)};
}

struct Row {
  double sr = 0.0, tpr = 0.0;
  std::optional<double> atr, sod, con, wed, sparc, ldlj;
  int stalls = 0;
  int faults = 0;
};

std::optional<double> mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

Row aggregate_rows(const std::vector<TrialSummary>& trials, double demo_duration) {
  Row r;
  std::vector<Outcome> outcomes;
  std::vector<double> times, cons, weds, sparcs, ldljs;
  int ok = 0;
  for (const auto& t : trials) {
    outcomes.push_back({t.success, t.duration});
    if (t.success) {
      ++ok;
      times.push_back(t.duration);
    }
    if (t.metrics.con) cons.push_back(*t.metrics.con);
    if (t.metrics.wed) weds.push_back(*t.metrics.wed);
    if (t.metrics.sparc) sparcs.push_back(*t.metrics.sparc);
    if (t.metrics.ldlj) ldljs.push_back(*t.metrics.ldlj);
    r.stalls += t.stalls;
    r.faults += t.fault ? 1 : 0;
  }
  r.sr = static_cast<double>(ok) / static_cast<double>(trials.size());
  r.tpr = tpr(outcomes, trials.front().t_max);
  r.atr = mean_of(times);
  if (r.atr && demo_duration > 0.0) r.sod = demo_duration / *r.atr;
  r.con = mean_of(cons);
  r.wed = mean_of(weds);
  r.sparc = mean_of(sparcs);
  r.ldlj = mean_of(ldljs);
  return r;
}

const char* kMetricColumns = "sr,tpr,atr,sod,con,wed,sparc,ldlj,stalls,faults";

std::string metric_cells(const Row& r) {
  return format_number(r.sr) + "," + format_number(r.tpr) + "," + opt(r.atr) + "," + opt(r.sod) +
         "," + opt(r.con) + "," + opt(r.wed) + "," + opt(r.sparc) + "," + opt(r.ldlj) + "," +
         std::to_string(r.stalls) + "," + std::to_string(r.faults);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

int sweep_speed(const ExperimentConfig& cfg, const std::vector<Method>& methods, std::ostream& out) {
  cfg.validate();
  const std::vector<Demonstration> library = build_library(cfg);
  const double demo_len = mean_demo_duration(library);
  const int h_c = cfg.policy.horizon_condition;
  out << "method,c,trials," << kMetricColumns << '\n';
  int rows = 0;
  for (Method m : methods) {
    for (double c : cfg.c_values) {
      const auto trials = parallel_map<TrialSummary>(cfg.trials, cfg.jobs, [&](int i) {
        return summarize(run_method_trial(cfg, library, m, c, i), h_c, cfg.wed_decay);
      });
      out << method_name(m) << ',' << format_number(c) << ',' << cfg.trials << ','
          << metric_cells(aggregate_rows(trials, demo_len)) << '\n';
      ++rows;
    }
  }
  return rows;
}

int sweep_gain_replay(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const std::vector<Demonstration> demos = generate_demos(cfg.task, cfg.demos, cfg.seed, cfg.script);
  const double demo_len = mean_demo_duration(demos);
  out << "c,gain,target,trials," << kMetricColumns << '\n';
  int rows = 0;
  for (double c : cfg.c_values) {
    for (const GainProfile& g : {low_gain(), high_gain()}) {
      for (TargetMode target : {TargetMode::kCommanded, TargetMode::kReached}) {
        const auto trials = parallel_map<TrialSummary>(cfg.demos, cfg.jobs, [&](int i) {
          ReplaySpec spec;
          spec.target = target;
          spec.gains = g;
          spec.c = c;
          const RolloutLog log = run_replay(demos[i], spec, task_for_demo(cfg.task, demos[i]), cfg.dynamics);
          return summarize(log, cfg.policy.horizon_condition, cfg.wed_decay);
        });
        out << format_number(c) << ',' << (g.label == GainLabel::kHighGain ? "high" : "low") << ','
            << (target == TargetMode::kReached ? "reached" : "commanded") << ',' << cfg.demos << ','
            << metric_cells(aggregate_rows(trials, demo_len)) << '\n';
        ++rows;
      }
    }
  }
  return rows;
}

int sweep_noise(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const std::vector<Demonstration> demos = generate_demos(cfg.task, cfg.demos, cfg.seed, cfg.script);
  const double demo_len = mean_demo_duration(demos);
  out << "noise,gain,target,trials," << kMetricColumns << '\n';
  int rows = 0;
  for (double noise : cfg.noise_scales) {
    // Each controller follows the targets it reproduces at demo speed.
    for (bool high : {false, true}) {
      const auto trials = parallel_map<TrialSummary>(cfg.trials, cfg.jobs, [&](int i) {
        const Demonstration& demo = demos[static_cast<std::size_t>(i) % demos.size()];
        ReplaySpec spec;
        spec.target = high ? TargetMode::kReached : TargetMode::kCommanded;
        spec.gains = high ? high_gain() : low_gain();
        spec.c = 1.0;
        spec.noise = noise;
        spec.seed = trial_seed(cfg.seed, i);
        const RolloutLog log = run_replay(demo, spec, task_for_demo(cfg.task, demo), cfg.dynamics);
        return summarize(log, cfg.policy.horizon_condition, cfg.wed_decay);
      });
      out << format_number(noise) << ',' << (high ? "high" : "low") << ','
          << (high ? "reached" : "commanded") << ',' << cfg.trials << ','
          << metric_cells(aggregate_rows(trials, demo_len)) << '\n';
      ++rows;
    }
  }
  return rows;
}

int diagnose(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const std::vector<Demonstration> library = build_library(cfg);
  const MethodSetup setup = method_setup(cfg.method, 1.0, cfg);
  const MockPolicy policy(library, setup.policy, cfg.weights, cfg.seed, cfg.task.grasp_radius);
  out << "c,trial,e_pos,knn,kde,mmd\n";
  int rows = 0;
  for (double c : cfg.c_values) {
    const auto trials = parallel_map<OodTrial>(cfg.trials, cfg.jobs,
                                               [&](int i) { return run_ood_trial(cfg, policy, c, i); });
    for (const auto& t : trials) {
      out << format_number(t.c) << ',' << t.trial << ',' << format_number(t.e_pos) << ','
          << format_number(t.knn) << ',' << format_number(t.kde) << ',' << format_number(t.mmd) << '\n';
      ++rows;
    }
  }
  return rows;
}

int metrics_csv(const std::vector<RolloutLog>& logs, const std::vector<std::string>& names,
                double demo_duration, int h_c, std::ostream& out) {
  if (logs.empty()) throw UndefinedMetric("no rollouts");
  out << "rollout,trials," << kMetricColumns << '\n';
  std::vector<TrialSummary> all;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    all.push_back(summarize(logs[i], h_c, 0.9));
    out << (i < names.size() ? names[i] : std::to_string(i)) << ",1,"
        << metric_cells(aggregate_rows({all.back()}, demo_duration)) << '\n';
  }
  out << "ALL," << logs.size() << ',' << metric_cells(aggregate_rows(all, demo_duration)) << '\n';
  return static_cast<int>(logs.size()) + 1;
}

int report(std::istream& in, std::ostream& out) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty sweep file");
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"method", "c", "sr", "tpr", "sod"}) {
    if (!col.count(need)) throw FormatError(std::string("sweep file lacks column ") + need);
  }
  struct Best {
    std::vector<std::string> cells;
    double tpr = -1e300;
  };
  std::vector<std::string> order;
  std::map<std::string, Best> best;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size()) throw ParseError(n, "column count mismatch");
    const std::string& m = cells[col["method"]];
    if (!best.count(m)) order.push_back(m);
    const double t = std::stod(cells[col["tpr"]]);
    if (t > best[m].tpr) best[m] = {cells, t};
  }
  const std::vector<std::string> shown{"c", "sr", "tpr", "atr", "sod", "sparc", "con", "wed"};
  out << "method";
  for (const auto& s : shown) out << ',' << s;
  out << '\n';
  for (const auto& m : order) {
    out << m;
    for (const auto& s : shown) out << ',' << (col.count(s) ? best[m].cells[col[s]] : "");
    out << '\n';
  }
  return static_cast<int>(order.size());
}

}  // namespace sailx
