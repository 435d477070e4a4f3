#include "sailx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <unsupported/Eigen/FFT>

namespace sailx {

double tpr(const std::vector<Outcome>& outcomes, double t_max) {
  if (outcomes.empty()) throw UndefinedMetric("TPR of an empty set");
  if (!(t_max > 0.0)) throw InvalidInput("t_max must be positive");
  double sum = 0.0;
  for (const auto& o : outcomes) {
    if (o.success) {
      if (!(o.duration > 0.0)) throw InvalidInput("durations must be positive");
      sum += 1.0 / o.duration;
    } else {
      sum -= 1.0 / t_max;
    }
  }
  return sum / static_cast<double>(outcomes.size());
}

double sparc(const std::vector<double>& speed, const SparcParams& params) {
  if (speed.size() < 4) throw InvalidInput("SPARC needs at least four samples");
  if (params.pad_factor < 1 || !(params.sample_interval > 0.0)) throw InvalidInput("bad SPARC parameters");
  for (double v : speed) {
    if (!(v >= 0.0)) throw InvalidInput("speed samples must be non-negative");
  }
  const std::size_t n = speed.size() * static_cast<std::size_t>(params.pad_factor);
  std::vector<double> padded(n, 0.0);
  std::copy(speed.begin(), speed.end(), padded.begin());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, padded);
  const double dc = std::abs(spectrum[0]);
  if (!(dc > 0.0)) throw UndefinedMetric("SPARC of a zero speed profile");

  const double df = 1.0 / (static_cast<double>(n) * params.sample_interval);
  const std::size_t half = n / 2;
  std::vector<double> mag;
  for (std::size_t k = 0; k <= half && (k < 2 || k * df <= params.omega_max); ++k) {
    mag.push_back(std::abs(spectrum[k]) / dc);
  }
  std::size_t last = 1;
  for (std::size_t k = 1; k < mag.size(); ++k) {
    if (mag[k] >= params.threshold) last = k;
  }
  const double omega_c = static_cast<double>(last) * df;
  double arc = 0.0;
  for (std::size_t k = 1; k <= last; ++k) {
    const double dv = mag[k] - mag[k - 1];
    arc += std::sqrt((df / omega_c) * (df / omega_c) + dv * dv);
  }
  return -arc;
}

double ldlj(const std::vector<double>& speed, double dt) {
  if (speed.size() < 4) throw InvalidInput("LDLJ needs at least four samples");
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  const double peak = *std::max_element(speed.begin(), speed.end());
  if (!(peak > 0.0)) throw UndefinedMetric("LDLJ with zero peak speed");
  const std::size_t n = speed.size();
  std::vector<double> jerk2(n - 2);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double j = (speed[i + 1] - 2.0 * speed[i] + speed[i - 1]) / (dt * dt);
    jerk2[i - 1] = j * j;
  }
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < jerk2.size(); ++i) integral += 0.5 * (jerk2[i] + jerk2[i + 1]) * dt;
  const double duration = static_cast<double>(n - 1) * dt;
  const double dlj = std::pow(duration, 3) / (peak * peak) * integral;
  if (!(dlj > 0.0)) throw UndefinedMetric("LDLJ of a jerk-free profile");
  return std::log(dlj);
}

namespace {
std::vector<Vector3> positions(const ActionChunk& c) {
  std::vector<Vector3> out;
  out.reserve(c.size());
  for (const auto& wp : c.waypoints) out.push_back(wp.pose.position());
  return out;
}
}  // namespace

double con(const std::vector<Vector3>& next, const std::vector<Vector3>& prev, int offset, int h_f) {
  if (offset < 0 || h_f < 0 || h_f >= static_cast<int>(next.size()) ||
      offset + h_f >= static_cast<int>(prev.size())) {
    throw InvalidInput("CON index out of range");
  }
  return (next[h_f] - prev[offset + h_f]).norm();
}

double con(const ActionChunk& next_chunk, const ActionChunk& prev_chunk, int h_e, int h_f) {
  return con(positions(next_chunk), positions(prev_chunk), h_e, h_f);
}

double wed(const std::vector<Vector3>& next, const std::vector<Vector3>& prev, int overlap,
           double decay, int offset) {
  if (overlap <= 0) throw UndefinedMetric("WED with empty overlap");
  if (offset < 0 || overlap > static_cast<int>(next.size()) ||
      offset + overlap > static_cast<int>(prev.size())) {
    throw InvalidInput("overlap exceeds chunk length");
  }
  double sum = 0.0;
  double w = 1.0;
  for (int i = 0; i < overlap; ++i) {
    sum += w * (next[i] - prev[offset + i]).norm();
    w *= decay;
  }
  return sum;
}

double wed(const ActionChunk& next_chunk, const ActionChunk& prev_chunk, int overlap, double decay,
           int offset) {
  return wed(positions(next_chunk), positions(prev_chunk), overlap, decay, offset);
}

std::vector<double> speed_profile(const RolloutLog& log, double rate) {
  std::vector<double> out;
  if (log.samples.size() < 2 || !(rate > 0.0)) return out;
  const double step = 1.0 / rate;
  const double t0 = log.samples.front().time;
  std::vector<Vector3> pts;
  std::size_t j = 0;
  for (int k = 0;; ++k) {
    const double t = t0 + k * step;
    if (t > log.samples.back().time + 1e-9) break;
    while (j + 1 < log.samples.size() && log.samples[j + 1].time <= t + 1e-9) ++j;
    if (j + 1 < log.samples.size() && log.samples[j].time < t) {
      const auto& a = log.samples[j];
      const auto& b = log.samples[j + 1];
      const double s = (t - a.time) / (b.time - a.time);
      pts.push_back(a.state.position() + s * (b.state.position() - a.state.position()));
    } else {
      pts.push_back(log.samples[j].state.position());
    }
  }
  for (std::size_t i = 1; i < pts.size(); ++i) out.push_back((pts[i] - pts[i - 1]).norm() / step);
  return out;
}

RolloutMetrics rollout_metrics(const RolloutLog& log, int h_c, double decay, double rate) {
  RolloutMetrics m;
  double con_sum = 0.0, wed_sum = 0.0;
  int n = 0;
  for (std::size_t i = 1; i < log.chunks.size(); ++i) {
    const auto& prev = log.chunks[i - 1].positions;
    const auto& next = log.chunks[i].positions;
    const int offset = log.chunks[i].offset;
    if (offset + h_c >= static_cast<int>(prev.size()) || h_c >= static_cast<int>(next.size())) continue;
    con_sum += con(next, prev, offset, h_c);
    const int overlap = std::min<int>(next.size(), static_cast<int>(prev.size()) - offset);
    wed_sum += wed(next, prev, overlap, decay, offset);
    ++n;
  }
  if (n > 0) {
    m.con = con_sum / n;
    m.wed = wed_sum / n;
  }
  const auto v = speed_profile(log, rate);
  SparcParams sp;
  sp.sample_interval = 1.0 / rate;
  try {
    if (v.size() >= 4) {
      m.sparc = sparc(v, sp);
      m.ldlj = ldlj(v, 1.0 / rate);
    }
  } catch (const UndefinedMetric&) {
  }
  return m;
}

namespace {
void mean_into(Measured<double>& out, const std::vector<double>& xs) {
  out.count = static_cast<int>(xs.size());
  if (xs.empty()) return;
  double s = 0.0;
  for (double x : xs) s += x;
  out.value = s / static_cast<double>(xs.size());
}
}  // namespace

MetricReport aggregate(const std::vector<RolloutLog>& logs, double mean_demo_duration, int h_c,
                       double decay) {
  MetricReport r;
  if (logs.empty()) return r;
  std::vector<Outcome> outcomes;
  std::vector<double> success, times, cons, weds, sparcs, ldljs;
  for (const auto& log : logs) {
    outcomes.push_back({log.success, log.duration});
    success.push_back(log.success ? 1.0 : 0.0);
    if (log.success) times.push_back(log.duration);
    const RolloutMetrics m = rollout_metrics(log, h_c, decay);
    if (m.con) cons.push_back(*m.con);
    if (m.wed) weds.push_back(*m.wed);
    if (m.sparc) sparcs.push_back(*m.sparc);
    if (m.ldlj) ldljs.push_back(*m.ldlj);
  }
  mean_into(r.sr, success);
  r.tpr.value = tpr(outcomes, logs.front().t_max);
  r.tpr.count = static_cast<int>(logs.size());
  mean_into(r.atr, times);
  if (r.atr.value && *r.atr.value > 0.0) {
    r.sod.value = mean_demo_duration / *r.atr.value;
    r.sod.count = r.atr.count;
  }
  mean_into(r.con, cons);
  mean_into(r.wed, weds);
  mean_into(r.sparc, sparcs);
  mean_into(r.ldlj, ldljs);
  return r;
}

}  // namespace sailx
