#include "tvc/simulator.hpp"

#include <cmath>

#include "tvc/config.hpp"

namespace tvc::sim {

namespace {

// Epoch lengths are truncated at 100 mean lengths; the affected probability
// mass is below e^-100.
constexpr double kEpochTruncation = 100.0;

}  // namespace

std::uint64_t node_seed(std::uint64_t run_seed, std::size_t node_index) {
    return Rng::derive(run_seed, node_index);
}

Epoch sample_epoch(const model::TimePeriod& period, std::size_t state, Rng& rng) {
    const auto& row = period.transition.at(state);
    double u = rng.uniform();
    std::size_t next = row.size() - 1;
    double acc = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        acc += row[j];
        if (u < acc) {
            next = j;
            break;
        }
    }
    Epoch e;
    e.kind = EpochKind::IN_COMMUNITY;
    e.community = next;
    const double mean_len = period.mean_epoch_length[next];
    e.length = std::min(rng.exponential(mean_len), kEpochTruncation * mean_len);
    const model::SpeedRange sr = period.speed_of(next);
    e.speed = rng.uniform(sr.v_min, sr.v_max);
    e.heading = rng.heading();
    e.pause_after = period.max_pause[next] > 0.0 ? rng.uniform(0.0, period.max_pause[next]) : 0.0;
    return e;
}

// --- NodeWalker -------------------------------------------------------------

NodeWalker::NodeWalker(const model::NodeProfile& profile, std::uint64_t seed, double dt)
    : profile_(profile), rng_(seed), dt_(dt) {
    state_ = draw_initial_state();
    decision_period_ = profile_.period_at(0.0);
    const Rect r = profile_.schedule[decision_period_].communities[state_].rect;
    pos_ = {rng_.uniform(r.x0, r.x1), rng_.uniform(r.y0, r.y1)};
    initial_ = pos_;
    begin_move(0.0, state_, decision_period_);
}

std::size_t NodeWalker::draw_initial_state() {
    const auto pi = model::stationary_distribution(profile_.schedule[0].transition);
    const double u = rng_.uniform();
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < pi.size(); ++j) {
        acc += pi[j];
        if (u < acc) return j;
    }
    return pi.size() - 1;
}

void NodeWalker::begin_move(double now, std::size_t j, std::size_t period_index) {
    const model::TimePeriod& period = profile_.schedule[period_index];
    const double mean_len = period.mean_epoch_length[j];
    const double length = std::min(rng_.exponential(mean_len), kEpochTruncation * mean_len);
    const model::SpeedRange sr = period.speed_of(j);
    const double speed = rng_.uniform(sr.v_min, sr.v_max);
    const double heading = rng_.heading();
    const double max_pause = period.max_pause[j];

    act_.phase = Phase::MOVING;
    act_.kind = EpochKind::IN_COMMUNITY;
    act_.community = j;
    act_.speed = speed;
    act_.heading = heading;
    act_.until = now + length / speed;
    if (profile_.onoff.kind == model::OnOffKind::FIXED_PROB)
        act_.on_override = rng_.bernoulli(profile_.onoff.p_on[period_index][j]);

    pending_pause_ = max_pause > 0.0 ? rng_.uniform(0.0, max_pause) : 0.0;
    bounds_ = period.communities[j].rect;

    if (record_waypoints_) {
        const geometry::Vec2 end =
            geometry::torus_advance(pos_, heading, speed, length / speed, bounds_);
        waypoints_.push_back({now, end.x, end.y, speed});
    }
}

void NodeWalker::advance_position(double dt_step) {
    if (dt_step <= 0.0) return;
    if (act_.phase == Phase::MOVING) {
        pos_ = geometry::torus_advance(pos_, act_.heading, act_.speed, dt_step, bounds_);
    } else if (act_.phase == Phase::TRANSITIONAL) {
        const double dx = act_.target.x - pos_.x;
        const double dy = act_.target.y - pos_.y;
        const double dist = std::hypot(dx, dy);
        const double step = act_.speed * dt_step;
        if (step >= dist || dist == 0.0) {
            pos_ = act_.target;
        } else {
            pos_.x += dx / dist * step;
            pos_.y += dy / dist * step;
        }
    }
}

void NodeWalker::start_epoch(double now) {
    // Decision point after a completed epoch (or a boundary-crossing
    // transitional epoch). Within the deciding period the community chain
    // advances by one step; entering a new period re-draws the community
    // from that period's stationary distribution.
    const std::size_t tp = profile_.period_at(now);
    std::size_t next;
    if (tp != decision_period_) {
        const auto pi = model::stationary_distribution(profile_.schedule[tp].transition);
        const double u = rng_.uniform();
        double acc = 0.0;
        next = pi.size() - 1;
        for (std::size_t j = 0; j + 1 < pi.size(); ++j) {
            acc += pi[j];
            if (u < acc) {
                next = j;
                break;
            }
        }
    } else {
        const auto& row = profile_.schedule[tp].transition[state_];
        const double u = rng_.uniform();
        double acc = 0.0;
        next = row.size() - 1;
        for (std::size_t j = 0; j + 1 < row.size(); ++j) {
            acc += row[j];
            if (u < acc) {
                next = j;
                break;
            }
        }
    }
    state_ = next;
    decision_period_ = tp;

    const model::TimePeriod& period = profile_.schedule[tp];
    const Rect target_rect = period.communities[next].rect;
    if (!target_rect.contains(pos_)) {
        // Bridge disjoint communities with a straight transitional epoch to a
        // uniform point of the destination.
        const geometry::Vec2 target{rng_.uniform(target_rect.x0, target_rect.x1),
                                    rng_.uniform(target_rect.y0, target_rect.y1)};
        const model::SpeedRange sr = period.speed_of(next);
        const double speed = rng_.uniform(sr.v_min, sr.v_max);
        const double dist = std::hypot(target.x - pos_.x, target.y - pos_.y);
        act_.phase = Phase::TRANSITIONAL;
        act_.kind = EpochKind::TRANSITIONAL;
        act_.community = next;
        act_.speed = speed;
        act_.heading = 0.0;
        act_.target = target;
        act_.until = now + dist / speed;
        pending_pause_ = 0.0;
        if (profile_.onoff.kind == model::OnOffKind::FIXED_PROB)
            act_.on_override = rng_.bernoulli(profile_.onoff.p_on[tp][next]);
        if (record_waypoints_) waypoints_.push_back({now, target.x, target.y, speed});
        return;
    }
    begin_move(now, next, tp);
}

bool NodeWalker::compute_on() const {
    switch (profile_.onoff.kind) {
        case model::OnOffKind::ALWAYS_ON:
            return true;
        case model::OnOffKind::ON_WHEN_PAUSED:
            return act_.phase == Phase::PAUSED;
        case model::OnOffKind::ON_WHEN_MOVING:
            return act_.phase == Phase::MOVING && act_.kind == EpochKind::IN_COMMUNITY;
        case model::OnOffKind::FIXED_PROB:
            return act_.on_override;
    }
    return true;
}

Sample NodeWalker::next_sample() {
    const double t = sample_time_;
    while (act_.until <= t) {
        const double end = act_.until;
        advance_position(end - clock_);
        clock_ = end;
        switch (act_.phase) {
            case Phase::MOVING:
                if (pending_pause_ > 0.0) {
                    act_.phase = Phase::PAUSED;
                    act_.until = end + pending_pause_;
                    pending_pause_ = 0.0;
                } else {
                    start_epoch(end);
                }
                break;
            case Phase::PAUSED:
                start_epoch(end);
                break;
            case Phase::TRANSITIONAL: {
                pos_ = act_.target;
                const std::size_t tp = profile_.period_at(end);
                if (tp != decision_period_) {
                    // The bridge outlived its period; re-decide under the new
                    // period's settings.
                    start_epoch(end);
                } else {
                    begin_move(end, act_.community, tp);
                }
                break;
            }
        }
    }
    advance_position(t - clock_);
    clock_ = t;

    Sample s;
    s.t = t;
    s.x = pos_.x;
    s.y = pos_.y;
    s.on = compute_on();
    s.phase = act_.phase;
    s.period = profile_.period_at(t);
    s.community = act_.community;
    sample_time_ += dt_;
    return s;
}

// --- run drivers ------------------------------------------------------------

namespace {

std::size_t sample_count(const RunSpec& run) {
    return static_cast<std::size_t>(std::floor(run.duration / run.dt)) + 1;
}

std::string profiles_digest(const std::vector<model::NodeProfile>& profiles) {
    std::string key;
    for (const auto& p : profiles) {
        key += p.id;
        key += ';';
        key += std::to_string(p.period_count());
        key += ';';
        for (const auto& period : p.schedule) {
            key += std::to_string(period.duration) + ',';
            for (const auto& c : period.communities)
                key += std::to_string(c.rect.x0) + ':' + std::to_string(c.rect.y0) + ':' +
                       std::to_string(c.edge_length) + ',';
        }
    }
    return config::digest(key);
}

}  // namespace

void generate(const RunSpec& run, const SampleVisitor& visitor) {
    const std::size_t steps = sample_count(run);
    for (std::size_t i = 0; i < run.profiles.size(); ++i) {
        NodeWalker walker(run.profiles[i], node_seed(run.seed, i), run.dt);
        for (std::size_t k = 0; k < steps; ++k)
            if (!visitor(i, walker.next_sample())) break;
    }
}

Trace generate_trace(const RunSpec& run) {
    Trace trace;
    trace.dt = run.dt;
    trace.duration = run.duration;
    trace.seed = run.seed;
    trace.profile_digest = profiles_digest(run.profiles);
    trace.nodes.resize(run.profiles.size());

    const std::size_t steps = sample_count(run);
    for (std::size_t i = 0; i < run.profiles.size(); ++i) {
        NodeWalker walker(run.profiles[i], node_seed(run.seed, i), run.dt);
        walker.record_waypoints(true);
        NodeTrace& node = trace.nodes[i];
        node.id = run.profiles[i].id;
        node.initial = walker.initial_position();
        node.samples.reserve(steps);
        for (std::size_t k = 0; k < steps; ++k) node.samples.push_back(walker.next_sample());
        node.waypoints = walker.waypoints();
    }
    return trace;
}

}  // namespace tvc::sim
