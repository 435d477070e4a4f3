#include "sailx/io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace sailx {

using nlohmann::json;

namespace {

json pose_json(const Pose& p) {
  const auto& x = p.position();
  const auto& q = p.orientation();
  return json::array({x.x(), x.y(), x.z(), q.w(), q.x(), q.y(), q.z()});
}

Pose pose_from(const json& j) {
  if (!j.is_array() || j.size() != 7) throw std::invalid_argument("pose needs 7 numbers");
  const Eigen::Quaterniond q(j[3].get<double>(), j[4].get<double>(), j[5].get<double>(),
                             j[6].get<double>());
  return Pose(Vector3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>()), q);
}

json vec_json(const Vector3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vector3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("vector needs 3 numbers");
  return Vector3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

// Reads non-empty lines, tagging failures with their 1-based line number.
template <typename F>
void for_each_line(std::istream& in, F&& handle) {
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(n, e.what());
    }
    try {
      handle(n, j);
    } catch (const FormatError&) {
      throw;
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(n, e.what());
    }
  }
  if (n == 0) throw FormatError("empty file");
}

void check_header(const json& j, const char* kind) {
  if (!j.is_object() || !j.contains("format")) throw FormatError("missing format header");
  if (j.at("format") != kFormatVersion) {
    throw FormatError("unsupported format " + j.at("format").dump() + ", expected " + kFormatVersion);
  }
  if (j.value("kind", std::string()) != kind) throw FormatError(std::string("not a ") + kind + " file");
}

template <typename T, typename W>
void write_file(const std::string& path, const T& value, W writer) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  writer(out, value);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::ifstream open_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

}  // namespace

void write_demos(std::ostream& out, const std::vector<Demonstration>& demos) {
  out << json{{"format", kFormatVersion}, {"kind", "demos"}, {"count", demos.size()}}.dump() << '\n';
  for (std::size_t d = 0; d < demos.size(); ++d) {
    const auto& demo = demos[d];
    out << json{{"demo", d},
                {"object_start", pose_json(demo.object_start)},
                {"goal", vec_json(demo.goal_position)},
                {"delta_star", demo.delta_star},
                {"records", demo.size()}}
               .dump()
        << '\n';
    for (const auto& r : demo.records) {
      json j{{"step", r.step}, {"time", r.time}, {"cmd", pose_json(r.commanded)},
             {"reached", pose_json(r.reached)}, {"grip", r.gripper}};
      j["k"] = r.k ? json(*r.k) : json(nullptr);
      out << j.dump() << '\n';
    }
  }
}

std::vector<Demonstration> read_demos(std::istream& in) {
  std::vector<Demonstration> demos;
  bool header = false;
  std::size_t expected = 0;
  std::size_t pending = 0;
  for_each_line(in, [&](int, const json& j) {
    if (!header) {
      check_header(j, "demos");
      expected = j.at("count").get<std::size_t>();
      header = true;
      return;
    }
    if (j.contains("demo")) {
      if (pending != 0) throw std::invalid_argument("previous demonstration is incomplete");
      Demonstration d;
      d.object_start = pose_from(j.at("object_start"));
      d.goal_position = vec_from(j.at("goal"));
      d.delta_star = j.at("delta_star").get<double>();
      pending = j.at("records").get<std::size_t>();
      demos.push_back(std::move(d));
      return;
    }
    if (demos.empty() || pending == 0) throw std::invalid_argument("record outside a demonstration");
    DemoRecord r;
    r.step = j.at("step").get<int>();
    r.time = j.at("time").get<double>();
    r.commanded = pose_from(j.at("cmd"));
    r.reached = pose_from(j.at("reached"));
    r.gripper = j.at("grip").get<double>();
    if (j.contains("k") && !j.at("k").is_null()) r.k = j.at("k").get<int>();
    demos.back().records.push_back(r);
    --pending;
  });
  if (pending != 0) throw FormatError("truncated demonstration");
  if (demos.size() != expected) throw FormatError("demonstration count mismatch");
  return demos;
}

void write_demos(const std::string& path, const std::vector<Demonstration>& demos) {
  write_file(path, demos, [](std::ostream& o, const auto& v) { write_demos(o, v); });
}

std::vector<Demonstration> read_demos(const std::string& path) {
  auto in = open_read(path);
  return read_demos(in);
}

void write_rollout(std::ostream& out, const RolloutLog& log) {
  out << json{{"format", kFormatVersion}, {"kind", "rollout"},     {"success", log.success},
              {"fault", log.fault},       {"duration", log.duration}, {"t_max", log.t_max},
              {"stall_count", log.stall_count}, {"splice_count", log.splice_count},
              {"physics_dt", log.physics_dt}}
             .dump()
      << '\n';
  for (const auto& s : log.samples) {
    out << json{{"t", s.time},          {"ref", pose_json(s.reference)}, {"state", pose_json(s.state)},
                {"e_pos", s.error.e_pos}, {"e_ori", s.error.e_ori},     {"grip", s.gripper}}
               .dump()
        << '\n';
  }
  for (const auto& e : log.events) out << json{{"event", e.tag}, {"t", e.time}}.dump() << '\n';
  for (std::size_t i = 0; i < log.chunks.size(); ++i) {
    const auto& c = log.chunks[i];
    json pos = json::array();
    for (const auto& p : c.positions) pos.push_back(vec_json(p));
    out << json{{"chunk", i},           {"t_o", c.t_o},
                {"t_a", c.t_a},         {"offset", c.offset},
                {"skipped", c.skipped}, {"guided", c.guidance_applied},
                {"e_pos", c.error.e_pos}, {"e_ori", c.error.e_ori},
                {"src", json::array({c.source_demo, c.source_index})},
                {"pos", pos}}
               .dump()
        << '\n';
  }
}

RolloutLog read_rollout(std::istream& in) {
  RolloutLog log;
  bool header = false;
  for_each_line(in, [&](int, const json& j) {
    if (!header) {
      check_header(j, "rollout");
      log.success = j.at("success").get<bool>();
      log.fault = j.at("fault").get<bool>();
      log.duration = j.at("duration").get<double>();
      log.t_max = j.at("t_max").get<double>();
      log.stall_count = j.at("stall_count").get<int>();
      log.splice_count = j.at("splice_count").get<int>();
      log.physics_dt = j.at("physics_dt").get<double>();
      header = true;
    } else if (j.contains("event")) {
      log.events.push_back({j.at("t").get<double>(), j.at("event").get<std::string>()});
    } else if (j.contains("chunk")) {
      ChunkRecord c;
      c.t_o = j.at("t_o").get<double>();
      c.t_a = j.at("t_a").get<double>();
      c.offset = j.at("offset").get<int>();
      c.skipped = j.at("skipped").get<int>();
      c.guidance_applied = j.at("guided").get<bool>();
      c.source_demo = j.at("src").at(0).get<int>();
      c.source_index = j.at("src").at(1).get<int>();
      c.error = {j.at("e_pos").get<double>(), j.at("e_ori").get<double>()};
      for (const auto& p : j.at("pos")) c.positions.push_back(vec_from(p));
      log.chunks.push_back(std::move(c));
    } else {
      TraceSample s;
      s.time = j.at("t").get<double>();
      s.reference = pose_from(j.at("ref"));
      s.state = pose_from(j.at("state"));
      s.error = {j.at("e_pos").get<double>(), j.at("e_ori").get<double>()};
      s.gripper = j.at("grip").get<double>();
      log.samples.push_back(s);
    }
  });
  return log;
}

void write_rollout(const std::string& path, const RolloutLog& log) {
  write_file(path, log, [](std::ostream& o, const auto& v) { write_rollout(o, v); });
}

RolloutLog read_rollout(const std::string& path) {
  auto in = open_read(path);
  return read_rollout(in);
}

void ModalityCache::push(double time, std::int64_t id) {
  if (!std::isfinite(time)) throw InvalidInput("timestamp must be finite");
  if (!entries_.empty() && time < entries_.back().time) throw InvalidInput("timestamps must not decrease");
  if (capacity_ == 0) return;
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.push_back({time, id});
}

const ModalityCache::Entry& ModalityCache::nearest(double t) const {
  if (entries_.empty()) throw AlignmentError("empty modality cache");
  auto it = std::lower_bound(entries_.begin(), entries_.end(), t,
                             [](const Entry& e, double v) { return e.time < v; });
  if (it == entries_.end()) return entries_.back();
  if (it == entries_.begin()) return *it;
  auto prev = std::prev(it);
  return (t - prev->time) <= (it->time - t) ? *prev : *it;
}

Alignment align_observations(const std::vector<ModalityCache>& caches, double t) {
  if (caches.empty()) throw AlignmentError("no modalities");
  Alignment out;
  double worst = -1.0;
  for (const auto& c : caches) {
    const auto& e = c.nearest(t);
    if (std::abs(e.time - t) > worst) {
      worst = std::abs(e.time - t);
      out.anchor = e.time;
    }
  }
  for (const auto& c : caches) out.picks.push_back(c.nearest(out.anchor));
  return out;
}

TaskSpec task_for_demo(const TaskSpec& base, const Demonstration& demo) {
  TaskSpec s = base;
  s.object_start = demo.object_start;
  s.goal_position = demo.goal_position;
  if (!demo.records.empty()) s.robot_start = demo.records.front().reached;
  return s;
}

}  // namespace sailx
