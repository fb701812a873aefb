#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tvc/model.hpp"
#include "tvc/rng.hpp"

namespace tvc::sim {

using geometry::Rect;
using geometry::Vec2;

enum class Phase { MOVING, PAUSED, TRANSITIONAL };

enum class EpochKind { IN_COMMUNITY, TRANSITIONAL };

struct Epoch {
    EpochKind kind = EpochKind::IN_COMMUNITY;
    std::size_t community = 0;   // destination community for TRANSITIONAL
    double length = 0.0;         // meters
    double speed = 0.0;          // m/s
    double heading = 0.0;        // radians; unused for TRANSITIONAL
    double pause_after = 0.0;    // seconds; 0 for TRANSITIONAL
    Vec2 target;                 // only for TRANSITIONAL
};

struct RunSpec {
    std::uint64_t seed = 0;
    double duration = 0.0;
    double dt = 1.0;
    std::vector<model::NodeProfile> profiles;
};

struct Sample {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    bool on = true;
    // Extra context, not part of the serialized trace.
    Phase phase = Phase::MOVING;
    std::size_t period = 0;
    std::size_t community = 0;
};

// Movement start event, kept for ns-2 output: at time t the node heads to
// (x, y) at `speed`.
struct Waypoint {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double speed = 0.0;
};

struct NodeTrace {
    std::string id;
    Vec2 initial;
    std::vector<Sample> samples;
    std::vector<Waypoint> waypoints;
};

struct Trace {
    double dt = 1.0;
    double duration = 0.0;
    std::uint64_t seed = 0;
    std::string profile_digest;
    std::vector<NodeTrace> nodes;
};

// Single-node mobility process. Pull-based: next_sample() advances exactly
// one sampling step, so callers can run nodes in lockstep (meeting-time
// harness) or alone (hitting-time harness) without materializing a trace.
// Holds a reference to the profile, which must outlive the walker.
class NodeWalker {
  public:
    NodeWalker(const model::NodeProfile& profile, std::uint64_t node_seed, double dt);

    // State at the next sampling instant; first call returns t = 0.
    Sample next_sample();

    const model::NodeProfile& profile() const { return profile_; }
    const std::vector<Waypoint>& waypoints() const { return waypoints_; }
    Vec2 initial_position() const { return initial_; }
    void record_waypoints(bool enabled) { record_waypoints_ = enabled; }

  private:
    struct Activity {
        Phase phase = Phase::MOVING;
        double until = 0.0;          // absolute end time
        EpochKind kind = EpochKind::IN_COMMUNITY;
        std::size_t community = 0;
        double speed = 0.0;
        double heading = 0.0;
        Vec2 target;                 // TRANSITIONAL destination
        bool on_override = false;    // FIXED_PROB draw for this epoch
    };

    void start_epoch(double now);
    void begin_move(double now, std::size_t j, std::size_t period_index);
    void advance_position(double dt_step);
    bool compute_on() const;
    std::size_t draw_initial_state();

    const model::NodeProfile& profile_;
    Rng rng_;
    double dt_;
    double sample_time_ = 0.0;
    double clock_ = 0.0;  // time at which pos_ is current
    Vec2 pos_;
    Vec2 initial_;
    Activity act_;
    Rect bounds_;                // torus bounds of the running epoch
    double pending_pause_ = 0.0;
    std::size_t state_ = 0;            // current community index
    std::size_t decision_period_ = 0;  // period index when state_ was chosen
    bool record_waypoints_ = false;
    std::vector<Waypoint> waypoints_;
};

// Deterministic per-node substream: adding nodes never perturbs the paths of
// existing ones.
std::uint64_t node_seed(std::uint64_t run_seed, std::size_t node_index);

// One epoch drawn from the period's distributions, for direct inspection in
// tests. Community selection uses row `state` of the period's matrix.
Epoch sample_epoch(const model::TimePeriod& period, std::size_t state, Rng& rng);

Trace generate_trace(const RunSpec& run);

// Streaming variant: visitor(node_index, sample) is called for every node in
// node order, each node's samples in time order. Returns false to stop that
// node early.
using SampleVisitor = std::function<bool(std::size_t, const Sample&)>;
void generate(const RunSpec& run, const SampleVisitor& visitor);

enum class TraceFormat { NS2, CSV };

// Serializes the trace as a deterministic byte stream; returns bytes written.
//   NS2: initial $node_(i) set X_/Y_/Z_ lines, then one setdest line per
//        movement start, all numbers with two decimals.
//   CSV: header t,node,x,y,on and one row per sample (shortest round-trip
//        float formatting).
std::size_t emit(const Trace& trace, TraceFormat format, std::ostream& out);

// Sidecar metadata for a generated trace.
std::string metadata_json(const Trace& trace);

}  // namespace tvc::sim
