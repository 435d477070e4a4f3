#ifndef SAILX_IO_HPP
#define SAILX_IO_HPP

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "sailx/demo.hpp"
#include "sailx/scheduler.hpp"
#include "sailx/sim.hpp"

namespace sailx {

inline constexpr const char* kFormatVersion = "sailx-v1";

struct ParseError : std::runtime_error {
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
  int line;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AlignmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One JSON object per line; the first line is a header carrying the version.
void write_demos(std::ostream& out, const std::vector<Demonstration>& demos);
std::vector<Demonstration> read_demos(std::istream& in);
void write_demos(const std::string& path, const std::vector<Demonstration>& demos);
std::vector<Demonstration> read_demos(const std::string& path);

void write_rollout(std::ostream& out, const RolloutLog& log);
RolloutLog read_rollout(std::istream& in);
void write_rollout(const std::string& path, const RolloutLog& log);
RolloutLog read_rollout(const std::string& path);

/// Fixed-capacity history of (timestamp, sample id) for one sensor stream.
class ModalityCache {
 public:
  struct Entry {
    double time = 0.0;
    std::int64_t id = 0;
  };

  explicit ModalityCache(std::size_t capacity = 100) : capacity_(capacity) {}

  /// Timestamps must be non-decreasing; the oldest entry is evicted when full.
  void push(double time, std::int64_t id);
  const Entry& nearest(double t) const;

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<Entry>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<Entry> entries_;
};

struct Alignment {
  double anchor = 0.0;
  std::vector<ModalityCache::Entry> picks;
};

/// Nearest sample per modality to t; the pick farthest from t becomes the
/// anchor and every modality re-picks its sample nearest the anchor.
Alignment align_observations(const std::vector<ModalityCache>& caches, double t);

/// Scripted teleoperation: timing, workspace box and operator behavior.
struct DemoScript {
  Vector3 box_min{0.35, -0.1, 0.02};
  Vector3 box_max{0.45, 0.1, 0.02};
  double delta_star = 0.05;
  double hover_height = 0.05;
  double lift_height = 0.15;
  double align_step = 0.015;
  double grasp_dwell = 0.6;
  double release_dwell = 0.5;
  double transport_yaw = 0.5236;  // rad
  double timing_jitter = 0.1;     // relative segment duration spread
  GainProfile teleop_gains = low_gain();
  DynamicsParams dynamics = [] {
    DynamicsParams p;
    p.gravity = 9.81;
    return p;
  }();
};

/// n scripted pick-place demonstrations executed through the sim with the
/// teleoperation controller; deterministic per seed.
std::vector<Demonstration> generate_demos(const TaskSpec& spec, int n, std::uint64_t seed,
                                          const DemoScript& script = {});

/// Task spec with the object placed at a demo's start.
TaskSpec task_for_demo(const TaskSpec& base, const Demonstration& demo);

}  // namespace sailx

#endif  // SAILX_IO_HPP
