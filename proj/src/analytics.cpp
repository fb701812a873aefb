#include "tvc/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "tvc/rng.hpp"

namespace tvc::analytics {

using model::NodeProfile;
using model::StateProbabilities;

CommRange::CommRange(double k) : range(k) {
    if (!(k > 0.0)) throw Error(ErrorCode::INVARIANT_ERROR, "transmission range must be > 0");
}

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<EffectiveState> effective_states(const NodeProfile& node, std::size_t t,
                                             const StateProbabilities& probs) {
    const model::TimePeriod& period = node.schedule[t];
    std::vector<EffectiveState> out;
    double field_probability = probs.p_transition;
    for (std::size_t j = 0; j < period.community_count(); ++j) {
        if (period.communities[j].is_roaming) {
            field_probability += probs.p_state(j);
        } else {
            const double c = period.communities[j].edge_length;
            out.push_back({period.communities[j].rect, c * c, probs.p_state(j)});
        }
    }
    const double n = node.field.edge_length;
    out.push_back({node.field.rect(), n * n, field_probability});
    return out;
}

// Per-period survival compounding with log1p for small probabilities.
double period_survival(double p_unit, double duration) {
    if (p_unit <= 0.0) return 1.0;
    if (p_unit >= 1.0) return 0.0;
    return std::exp(duration * std::log1p(-p_unit));
}

struct TailTerms {
    double corrected = 0.0;
    double approx = 0.0;
};

// Expected time into the final period given the event lands in it. The
// tail approximation uses the unconditional geometric mean 1/p; conditioning
// on the event occurring within the period subtracts T (1 - P) / P, which
// vanishes in the long-period regime.
TailTerms final_period_tail(double p_unit, double duration, double p_period) {
    TailTerms tail;
    tail.approx = 1.0 / p_unit;
    tail.corrected = 1.0 / p_unit - duration * (1.0 - p_period) / p_period;
    return tail;
}

struct CycleTime {
    double expected = 0.0;
    double expected_tail_approx = 0.0;
    double cycle_probability = 0.0;
};

// Shared hitting/meeting assembly: per-period unit probabilities compound to
// per-period event probabilities, a full-cycle probability, and the expected
// time decomposed into full cycles, completed periods, and the final-period
// tail.
CycleTime assemble_cycle_time(std::vector<double> p_unit,
                              const std::vector<double>& durations) {
    const std::size_t v = p_unit.size();
    for (auto& p : p_unit) p = std::min(p, 1.0);  // unit-time probabilities
    std::vector<double> p_period(v);
    double log_survival = 0.0;
    for (std::size_t t = 0; t < v; ++t) {
        const double q = period_survival(p_unit[t], durations[t]);
        p_period[t] = 1.0 - q;
        log_survival += p_unit[t] > 0.0 && p_unit[t] < 1.0
                            ? durations[t] * std::log1p(-p_unit[t])
                            : (p_unit[t] >= 1.0 ? -1e300 : 0.0);
    }
    CycleTime out;
    out.cycle_probability = -std::expm1(log_survival);
    if (out.cycle_probability <= 0.0) {
        out.expected = kInfiniteTime;
        out.expected_tail_approx = kInfiniteTime;
        return out;
    }

    const double cycle = std::accumulate(durations.begin(), durations.end(), 0.0);
    const double full_cycles = cycle * (1.0 / out.cycle_probability - 1.0);

    double expected = 0.0;
    double expected_tail_approx = 0.0;
    double survive_before = 1.0;  // Pi_{i<t} (1 - P^i)
    double elapsed_before = 0.0;  // sum_{i<t} T^i
    for (std::size_t t = 0; t < v; ++t) {
        if (p_period[t] > 0.0) {
            const double weight = survive_before * p_period[t] / out.cycle_probability;
            const TailTerms tail = final_period_tail(p_unit[t], durations[t], p_period[t]);
            expected += weight * (elapsed_before + tail.corrected);
            expected_tail_approx += weight * (elapsed_before + tail.approx);
        }
        survive_before *= 1.0 - p_period[t];
        elapsed_before += durations[t];
    }
    out.expected = full_cycles + expected;
    out.expected_tail_approx = full_cycles + expected_tail_approx;
    return out;
}

std::vector<double> period_durations(const NodeProfile& node) {
    std::vector<double> out;
    for (const auto& p : node.schedule) out.push_back(p.duration);
    return out;
}

void require_aligned_schedules(const NodeProfile& a, const NodeProfile& b) {
    bool ok = a.period_count() == b.period_count();
    if (ok)
        for (std::size_t t = 0; t < a.period_count(); ++t)
            ok = ok && a.schedule[t].duration == b.schedule[t].duration;
    if (!ok)
        throw Error(ErrorCode::INVARIANT_ERROR,
                    "nodes '" + a.id + "' and '" + b.id + "' have unaligned schedules");
}

}  // namespace

double pairwise_degree_contribution(const Rect& a_comm, const Rect& b_comm, double k_range) {
    const double overlap = geometry::intersection_area(a_comm, b_comm);
    return kPi * k_range * k_range / a_comm.area() * overlap / b_comm.area();
}

DegreeReport average_node_degree(const NodeProfile& node,
                                 const std::vector<NodeProfile>& peers, CommRange k) {
    DegreeReport report;
    report.node = node.id;
    const double cycle = node.cycle_duration();

    std::vector<StateProbabilities> own_probs;
    for (std::size_t t = 0; t < node.period_count(); ++t)
        own_probs.push_back(model::state_probabilities(node, t));

    for (const NodeProfile& peer : peers) {
        if (peer.id == node.id) continue;
        require_aligned_schedules(node, peer);
        for (std::size_t t = 0; t < node.period_count(); ++t) {
            const double weight = node.schedule[t].duration / cycle;
            const auto own = effective_states(node, t, own_probs[t]);
            const auto other =
                effective_states(peer, t, model::state_probabilities(peer, t));
            for (std::size_t j = 0; j < own.size(); ++j) {
                for (std::size_t kk = 0; kk < other.size(); ++kk) {
                    const double overlap =
                        geometry::intersection_area(own[j].rect, other[kk].rect);
                    if (overlap <= 0.0) continue;
                    const double value = weight * own[j].p_state * other[kk].p_state * kPi *
                                         k.range * k.range / own[j].area * overlap /
                                         other[kk].area;
                    if (value == 0.0) continue;
                    report.contributions.push_back({t, peer.id, j, kk, value});
                    report.expected_degree += value;
                }
            }
        }
    }
    return report;
}

double unit_hitting_probability(const NodeProfile& node, const StateProbabilities& probs,
                                std::uint32_t membership, std::size_t period_index,
                                double k_range) {
    std::size_t base = 0;
    for (std::size_t t = 0; t < period_index; ++t) base += node.schedule[t].community_count();
    const model::TimePeriod& period = node.schedule[period_index];
    double p = 0.0;
    for (std::size_t j = 0; j < period.community_count(); ++j) {
        if (!((membership >> (base + j)) & 1u)) continue;
        const double c = period.communities[j].edge_length;
        p += probs.p_move[j] * 2.0 * k_range * period.mean_speed_of(j) / (c * c);
    }
    return p;
}

HittingReport hitting_time(const NodeProfile& node, CommRange k) {
    HittingReport report;
    report.node = node.id;
    report.k_range = k.range;

    std::vector<Rect> rects;
    for (const auto& period : node.schedule)
        for (const auto& community : period.communities) rects.push_back(community.rect);
    report.arrangement = geometry::build_arrangement(rects, node.field.rect());

    std::vector<StateProbabilities> probs;
    for (std::size_t t = 0; t < node.period_count(); ++t)
        probs.push_back(model::state_probabilities(node, t));
    const std::vector<double> durations = period_durations(node);

    bool any_hittable = false;
    double overall = 0.0;
    double overall_tail_approx = 0.0;
    for (const auto& cell : report.arrangement.cells) {
        CellHitting ch;
        ch.membership = cell.membership;
        ch.probability = cell.area / report.arrangement.field_area;

        std::vector<double> p_unit(node.period_count(), 0.0);
        for (std::size_t t = 0; t < node.period_count(); ++t) {
            p_unit[t] =
                unit_hitting_probability(node, probs[t], cell.membership, t, k.range);
            PeriodHit ph;
            ph.p_unit = p_unit[t];
            ph.p_period = 1.0 - period_survival(p_unit[t], durations[t]);
            ph.short_period = p_unit[t] > 0.0 && p_unit[t] * durations[t] < 1.0;
            report.any_short_period = report.any_short_period || ph.short_period;
            ch.periods.push_back(ph);
        }
        const CycleTime cycle = assemble_cycle_time(p_unit, durations);
        ch.cycle_probability = cycle.cycle_probability;
        ch.expected_time = cycle.expected;
        ch.expected_time_tail_approx = cycle.expected_tail_approx;
        if (cycle.cycle_probability > 0.0) any_hittable = true;

        overall += ch.probability * ch.expected_time;
        overall_tail_approx += ch.probability * ch.expected_time_tail_approx;
        report.cells.push_back(std::move(ch));
    }
    if (!any_hittable)
        throw Error(ErrorCode::NO_HIT_POSSIBLE,
                    "node '" + node.id + "': no scenario cell is hittable");
    report.expected_time = overall;
    report.expected_time_tail_approx = overall_tail_approx;
    return report;
}

namespace {

struct MeetingState {
    Rect rect;
    double area = 0.0;
    double p_move = 0.0;
    double p_pause = 0.0;
    double mean_speed = 0.0;
};

// Communities for the meeting computation: roaming states keep their own
// move/pause split but act on the whole field; transitional time is dropped.
std::vector<MeetingState> meeting_states(const NodeProfile& node, std::size_t t,
                                         const StateProbabilities& probs) {
    const model::TimePeriod& period = node.schedule[t];
    std::vector<MeetingState> out;
    for (std::size_t j = 0; j < period.community_count(); ++j) {
        MeetingState ms;
        const auto& community = period.communities[j];
        ms.rect = community.is_roaming ? node.field.rect() : community.rect;
        const double edge = community.is_roaming ? node.field.edge_length : community.edge_length;
        ms.area = edge * edge;
        ms.p_move = probs.p_move[j];
        ms.p_pause = probs.p_pause[j];
        ms.mean_speed = period.mean_speed_of(j);
        out.push_back(ms);
    }
    return out;
}

}  // namespace

double unit_meeting_probability(const NodeProfile& a, const NodeProfile& b,
                                std::size_t period_index, double k_range, double v_hat) {
    require_aligned_schedules(a, b);
    const auto pa = model::state_probabilities(a, period_index);
    const auto pb = model::state_probabilities(b, period_index);
    const auto sa = meeting_states(a, period_index, pa);
    const auto sb = meeting_states(b, period_index, pb);

    double p = 0.0;
    for (const auto& ja : sa) {
        for (const auto& kb : sb) {
            const double overlap = geometry::intersection_area(ja.rect, kb.rect);
            if (overlap <= 0.0) continue;
            const double geom = 2.0 * k_range * overlap / (ja.area * kb.area);
            const double move_move =
                ja.p_move * kb.p_move * v_hat * 0.5 * (ja.mean_speed + kb.mean_speed);
            const double move_pause = ja.p_move * kb.p_pause * ja.mean_speed;
            const double pause_move = ja.p_pause * kb.p_move * kb.mean_speed;
            p += geom * (move_move + move_pause + pause_move);
        }
    }
    return p;
}

MeetingReport meeting_time(const NodeProfile& a, const NodeProfile& b, CommRange k) {
    require_aligned_schedules(a, b);
    MeetingReport report;
    report.node_a = a.id;
    report.node_b = b.id;
    report.k_range = k.range;

    const std::vector<double> durations = period_durations(a);
    std::vector<double> p_unit(a.period_count(), 0.0);
    for (std::size_t t = 0; t < a.period_count(); ++t) {
        const model::SpeedRange sr = a.schedule[t].speed;
        const auto kc = geometry::relative_speed_factor(sr.v_min, sr.v_max, 1000000);
        report.v_hat = kc.v_hat;
        p_unit[t] = unit_meeting_probability(a, b, t, k.range, kc.v_hat);
        PeriodMeeting pm;
        pm.p_unit = p_unit[t];
        pm.p_period = 1.0 - period_survival(p_unit[t], durations[t]);
        pm.short_period = p_unit[t] > 0.0 && p_unit[t] * durations[t] < 1.0;
        report.periods.push_back(pm);
    }
    const CycleTime cycle = assemble_cycle_time(p_unit, durations);
    report.cycle_probability = cycle.cycle_probability;
    report.expected_time = cycle.expected;
    report.expected_time_tail_approx = cycle.expected_tail_approx;
    if (cycle.cycle_probability <= 0.0)
        throw Error(ErrorCode::NO_MEETING_POSSIBLE,
                    "nodes '" + a.id + "' and '" + b.id + "' can never meet");
    return report;
}

OverlapEstimate estimate_overlap_probability(double edge_a, double edge_b,
                                             const model::FieldSpec& field, std::size_t samples,
                                             std::uint64_t seed) {
    const double n = field.edge_length;
    if (!(edge_a > 0.0) || !(edge_b > 0.0) || edge_a > n || edge_b > n)
        throw Error(ErrorCode::INVARIANT_ERROR,
                    "community edges must lie in (0, field edge]");
    Rng rng(seed);
    std::size_t overlaps = 0;
    double area_sum = 0.0;
    double area_sq = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double ax = rng.uniform(0.0, n - edge_a);
        const double ay = rng.uniform(0.0, n - edge_a);
        const double bx = rng.uniform(0.0, n - edge_b);
        const double by = rng.uniform(0.0, n - edge_b);
        const double area = geometry::intersection_area({ax, ay, ax + edge_a, ay + edge_a},
                                                        {bx, by, bx + edge_b, by + edge_b});
        if (area > 0.0) {
            ++overlaps;
            area_sum += area;
            area_sq += area * area;
        }
    }
    OverlapEstimate out;
    const double m = static_cast<double>(samples);
    out.p_overlap = static_cast<double>(overlaps) / m;
    out.std_error_p = std::sqrt(out.p_overlap * (1.0 - out.p_overlap) / m);
    if (overlaps > 0) {
        const double c = static_cast<double>(overlaps);
        out.mean_area_given_overlap = area_sum / c;
        const double var =
            std::max(0.0, area_sq / c - out.mean_area_given_overlap * out.mean_area_given_overlap);
        out.std_error_area = std::sqrt(var / c);
    }
    return out;
}

// --- serialization ----------------------------------------------------------

using nlohmann::json;

namespace {

json to_json_value(double v) {
    if (std::isinf(v)) return "inf";
    return v;
}

}  // namespace

std::string to_json(const DegreeReport& r) {
    json j;
    j["node"] = r.node;
    j["expected_degree"] = r.expected_degree;
    json rows = json::array();
    for (const auto& c : r.contributions)
        rows.push_back({{"period", c.period},
                        {"peer", c.peer},
                        {"own_state", c.own_state},
                        {"peer_state", c.peer_state},
                        {"value", c.value}});
    j["contributions"] = rows;
    return j.dump(2);
}

std::string to_json(const HittingReport& r) {
    json j;
    j["node"] = r.node;
    j["k"] = r.k_range;
    j["expected_hitting_time_s"] = to_json_value(r.expected_time);
    j["expected_hitting_time_tail_approx_s"] = to_json_value(r.expected_time_tail_approx);
    j["short_period_warning"] = r.any_short_period;
    json cells = json::array();
    for (const auto& c : r.cells) {
        json cj;
        cj["membership"] = c.membership;
        cj["probability"] = c.probability;
        cj["cycle_probability"] = c.cycle_probability;
        cj["expected_time_s"] = to_json_value(c.expected_time);
        json periods = json::array();
        for (const auto& p : c.periods)
            periods.push_back(
                {{"p_unit", p.p_unit}, {"p_period", p.p_period}, {"short", p.short_period}});
        cj["periods"] = periods;
        cells.push_back(cj);
    }
    j["cells"] = cells;
    return j.dump(2);
}

std::string to_json(const MeetingReport& r) {
    json j;
    j["node_a"] = r.node_a;
    j["node_b"] = r.node_b;
    j["k"] = r.k_range;
    j["v_hat"] = r.v_hat;
    j["cycle_probability"] = r.cycle_probability;
    j["expected_meeting_time_s"] = to_json_value(r.expected_time);
    j["expected_meeting_time_tail_approx_s"] = to_json_value(r.expected_time_tail_approx);
    json periods = json::array();
    for (const auto& p : r.periods)
        periods.push_back(
            {{"p_unit", p.p_unit}, {"p_period", p.p_period}, {"short", p.short_period}});
    j["periods"] = periods;
    return j.dump(2);
}

std::string to_csv(const DegreeReport& r) {
    std::ostringstream out;
    out << "period,peer,own_state,peer_state,value\n";
    for (const auto& c : r.contributions)
        out << c.period << ',' << c.peer << ',' << c.own_state << ',' << c.peer_state << ','
            << c.value << '\n';
    return out.str();
}

std::string to_csv(const HittingReport& r) {
    std::ostringstream out;
    out << "membership,probability,cycle_probability,expected_time_s\n";
    for (const auto& c : r.cells)
        out << c.membership << ',' << c.probability << ',' << c.cycle_probability << ','
            << c.expected_time << '\n';
    return out.str();
}

std::string to_csv(const MeetingReport& r) {
    std::ostringstream out;
    out << "period,p_unit,p_period\n";
    for (std::size_t t = 0; t < r.periods.size(); ++t)
        out << t << ',' << r.periods[t].p_unit << ',' << r.periods[t].p_period << '\n';
    return out.str();
}

}  // namespace tvc::analytics
