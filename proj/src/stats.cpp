#include "tvc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>

#include "tvc/analytics.hpp"

namespace tvc::stats {

using sim::Sample;
using sim::Trace;

// --- ingestion ---------------------------------------------------------------

sim::Trace ingest_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line))
        throw Error(ErrorCode::PARSE_ERROR, "line 1: missing header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,node,x,y,on")
        throw Error(ErrorCode::PARSE_ERROR, "line 1: expected header 't,node,x,y,on'");

    Trace trace;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        double t, x, y;
        long node;
        int on;
        std::istringstream row(line);
        char c1, c2, c3, c4;
        if (!(row >> t >> c1 >> node >> c2 >> x >> c3 >> y >> c4 >> on) || c1 != ',' ||
            c2 != ',' || c3 != ',' || c4 != ',' || node < 0 || (on != 0 && on != 1))
            throw Error(ErrorCode::PARSE_ERROR,
                        "line " + std::to_string(line_no) + ": malformed row");
        if (trace.nodes.size() <= static_cast<std::size_t>(node))
            trace.nodes.resize(static_cast<std::size_t>(node) + 1);
        auto& samples = trace.nodes[static_cast<std::size_t>(node)].samples;
        if (!samples.empty() && t <= samples.back().t)
            throw Error(ErrorCode::NON_MONOTONE_TIME,
                        "line " + std::to_string(line_no) + ": node " + std::to_string(node) +
                            " time " + std::to_string(t) + " not increasing");
        Sample s;
        s.t = t;
        s.x = x;
        s.y = y;
        s.on = on == 1;
        samples.push_back(s);
        trace.duration = std::max(trace.duration, t);
    }
    for (std::size_t i = 0; i < trace.nodes.size(); ++i) {
        trace.nodes[i].id = std::to_string(i);
        if (trace.nodes[i].samples.size() >= 2)
            trace.dt = trace.nodes[i].samples[1].t - trace.nodes[i].samples[0].t;
    }
    return trace;
}

std::vector<ContactEvent> ingest_contact_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw Error(ErrorCode::PARSE_ERROR, "line 1: missing header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "a,b,start_s,end_s")
        throw Error(ErrorCode::PARSE_ERROR, "line 1: expected header 'a,b,start_s,end_s'");
    std::vector<ContactEvent> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        long a, b;
        double s, e;
        char c1, c2, c3;
        std::istringstream row(line);
        if (!(row >> a >> c1 >> b >> c2 >> s >> c3 >> e) || c1 != ',' || c2 != ',' ||
            c3 != ',' || a < 0 || b < 0 || e <= s)
            throw Error(ErrorCode::PARSE_ERROR,
                        "line " + std::to_string(line_no) + ": malformed contact row");
        out.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b), s, e});
    }
    return out;
}

// --- per-trace metrics --------------------------------------------------------

namespace {

std::size_t cell_index(double x, double y, double cell_size, std::size_t cells_per_axis) {
    auto clamp_cell = [&](double v) {
        auto idx = static_cast<long>(v / cell_size);
        if (idx < 0) idx = 0;
        if (idx >= static_cast<long>(cells_per_axis)) idx = static_cast<long>(cells_per_axis) - 1;
        return static_cast<std::size_t>(idx);
    };
    return clamp_cell(y) * cells_per_axis + clamp_cell(x);
}

std::size_t grid_cells(double field_edge, double cell_size) {
    const double cells = field_edge / cell_size;
    const double whole = std::round(cells);
    if (std::abs(cells - whole) > 1e-9 || whole < 1.0)
        throw Error(ErrorCode::INVARIANT_ERROR, "grid cell size must divide the field edge");
    return static_cast<std::size_t>(whole);
}

}  // namespace

PreferenceReport visiting_preference(const Trace& trace, double field_edge, double cell_size) {
    const std::size_t per_axis = grid_cells(field_edge, cell_size);
    PreferenceReport report;
    std::size_t longest = 0;
    for (const auto& node : trace.nodes) {
        std::map<std::size_t, double> on_time;
        for (const Sample& s : node.samples)
            if (s.on) on_time[cell_index(s.x, s.y, cell_size, per_axis)] += trace.dt;
        RankedPreference pref;
        pref.node = node.id;
        double total = 0.0;
        for (const auto& [cell, time] : on_time) {
            pref.fractions.push_back(time);
            total += time;
        }
        if (total <= 0.0) {
            pref.always_off = true;
        } else {
            for (auto& f : pref.fractions) f /= total;
            std::sort(pref.fractions.begin(), pref.fractions.end(), std::greater<>());
        }
        longest = std::max(longest, pref.fractions.size());
        report.per_node.push_back(std::move(pref));
    }
    report.mean_curve.assign(longest, 0.0);
    std::size_t contributing = 0;
    for (const auto& pref : report.per_node) {
        if (pref.always_off) continue;
        ++contributing;
        for (std::size_t r = 0; r < pref.fractions.size(); ++r)
            report.mean_curve[r] += pref.fractions[r];
    }
    if (contributing > 0)
        for (auto& v : report.mean_curve) v /= static_cast<double>(contributing);
    return report;
}

ReappearanceCurve reappearance_curve(const Trace& trace, double field_edge, double cell_size,
                                     const std::vector<double>& gaps) {
    const std::size_t per_axis = grid_cells(field_edge, cell_size);
    ReappearanceCurve curve;
    curve.gaps = gaps;
    curve.probabilities.assign(gaps.size(), 0.0);
    for (std::size_t g = 0; g < gaps.size(); ++g) {
        const auto lag = static_cast<std::size_t>(std::llround(gaps[g] / trace.dt));
        std::size_t pairs = 0;
        std::size_t same = 0;
        for (const auto& node : trace.nodes) {
            if (node.samples.size() <= lag) continue;
            for (std::size_t i = 0; i + lag < node.samples.size(); ++i) {
                const Sample& s0 = node.samples[i];
                const Sample& s1 = node.samples[i + lag];
                ++pairs;
                if (s0.on && s1.on &&
                    cell_index(s0.x, s0.y, cell_size, per_axis) ==
                        cell_index(s1.x, s1.y, cell_size, per_axis))
                    ++same;
            }
        }
        curve.probabilities[g] =
            pairs > 0 ? static_cast<double>(same) / static_cast<double>(pairs) : 0.0;
    }
    return curve;
}

Ecdf make_ecdf(std::vector<double> samples) {
    Ecdf e;
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    for (std::size_t i = 0; i < n; ++i) {
        // collapse ties to the right-continuous step value
        if (i + 1 < n && samples[i + 1] == samples[i]) continue;
        e.values.push_back(samples[i]);
        e.fractions.push_back(static_cast<double>(i + 1) / static_cast<double>(n));
    }
    return e;
}

ContactReport contacts(const Trace& trace, double k_range) {
    ContactReport report;
    const double k_sq = k_range * k_range;
    const std::size_t n = trace.nodes.size();
    std::vector<double> durations;
    std::vector<double> gaps;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const auto& sa = trace.nodes[a].samples;
            const auto& sb = trace.nodes[b].samples;
            const std::size_t len = std::min(sa.size(), sb.size());
            bool in_contact = false;
            double start = 0.0;
            double last_end = -1.0;
            for (std::size_t i = 0; i <= len; ++i) {
                bool close = false;
                if (i < len && sa[i].on && sb[i].on) {
                    const double dx = sa[i].x - sb[i].x;
                    const double dy = sa[i].y - sb[i].y;
                    close = dx * dx + dy * dy <= k_sq;
                }
                if (close && !in_contact) {
                    in_contact = true;
                    start = sa[i].t;
                } else if (!close && in_contact) {
                    in_contact = false;
                    const double end = (i < len ? sa[i].t : sa[len - 1].t + trace.dt);
                    report.events.push_back({a, b, start, end});
                    durations.push_back(end - start);
                    if (last_end >= 0.0) gaps.push_back(start - last_end);
                    last_end = end;
                }
            }
        }
    }
    report.durations = make_ecdf(std::move(durations));
    report.inter_meeting = make_ecdf(std::move(gaps));
    return report;
}

DegreeStats empirical_node_degree(const Trace& trace, double k_range) {
    DegreeStats stats;
    const std::size_t n = trace.nodes.size();
    if (n == 0) return stats;
    const double k_sq = k_range * k_range;
    std::size_t len = trace.nodes[0].samples.size();
    for (const auto& node : trace.nodes) len = std::min(len, node.samples.size());

    std::vector<double> neighbor_sum(n, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t a = 0; a < n; ++a) {
            const Sample& s1 = trace.nodes[a].samples[i];
            for (std::size_t b = a + 1; b < n; ++b) {
                const Sample& s2 = trace.nodes[b].samples[i];
                const double dx = s1.x - s2.x;
                const double dy = s1.y - s2.y;
                if (dx * dx + dy * dy <= k_sq) {
                    if (s2.on) neighbor_sum[a] += 1.0;
                    if (s1.on) neighbor_sum[b] += 1.0;
                }
            }
        }
    }
    for (std::size_t a = 0; a < n; ++a) {
        stats.per_node.push_back(neighbor_sum[a] / static_cast<double>(len));
        stats.mean += stats.per_node.back();
    }
    stats.mean /= static_cast<double>(n);
    return stats;
}

// --- Monte Carlo harnesses ----------------------------------------------------

namespace {

MonteCarloTime summarize(std::vector<double> samples, std::size_t timeouts) {
    MonteCarloTime out;
    out.timeouts = timeouts;
    out.iterations = samples.size() + timeouts;
    if (samples.empty()) return out;
    double sum = 0.0;
    for (double v : samples) sum += v;
    const auto n = static_cast<double>(samples.size());
    out.mean = sum / n;
    double ss = 0.0;
    for (double v : samples) ss += (v - out.mean) * (v - out.mean);
    if (samples.size() > 1) out.std_error = std::sqrt(ss / (n * (n - 1.0)));
    out.samples = std::move(samples);
    return out;
}

}  // namespace

MonteCarloTime empirical_hitting_time(const model::NodeProfile& profile, double k_range,
                                      std::size_t iterations, std::uint64_t seed,
                                      double timeout_cap) {
    if (timeout_cap <= 0.0) timeout_cap = 1e8;
    const double k_sq = k_range * k_range;
    const double n = profile.field.edge_length;
    std::vector<double> samples;
    samples.reserve(iterations);
    std::size_t timeouts = 0;
    for (std::size_t it = 0; it < iterations; ++it) {
        const std::uint64_t iter_seed = Rng::derive(seed, 0x417 + it);
        Rng target_rng(Rng::derive(iter_seed, 1));
        const double tx = target_rng.uniform(0.0, n);
        const double ty = target_rng.uniform(0.0, n);
        sim::NodeWalker walker(profile, Rng::derive(iter_seed, 2), 1.0);
        bool hit = false;
        for (double t = 0.0; t <= timeout_cap; t += 1.0) {
            const Sample s = walker.next_sample();
            const double dx = s.x - tx;
            const double dy = s.y - ty;
            if (s.on && dx * dx + dy * dy <= k_sq) {
                samples.push_back(s.t);
                hit = true;
                break;
            }
        }
        if (!hit) ++timeouts;
    }
    return summarize(std::move(samples), timeouts);
}

MonteCarloTime empirical_meeting_time(const model::NodeProfile& a, const model::NodeProfile& b,
                                      double k_range, std::size_t iterations, std::uint64_t seed,
                                      double timeout_cap) {
    if (timeout_cap <= 0.0) timeout_cap = 1e8;
    const double k_sq = k_range * k_range;
    std::vector<double> samples;
    samples.reserve(iterations);
    std::size_t timeouts = 0;
    for (std::size_t it = 0; it < iterations; ++it) {
        const std::uint64_t iter_seed = Rng::derive(seed, 0xABBA + it);
        sim::NodeWalker wa(a, Rng::derive(iter_seed, 1), 1.0);
        sim::NodeWalker wb(b, Rng::derive(iter_seed, 2), 1.0);
        bool met = false;
        for (double t = 0.0; t <= timeout_cap; t += 1.0) {
            const Sample s1 = wa.next_sample();
            const Sample s2 = wb.next_sample();
            const double dx = s1.x - s2.x;
            const double dy = s1.y - s2.y;
            if (s1.on && s2.on && dx * dx + dy * dy <= k_sq) {
                samples.push_back(s1.t);
                met = true;
                break;
            }
        }
        if (!met) ++timeouts;
    }
    return summarize(std::move(samples), timeouts);
}

OccupancyMeasurement measure_occupancy(const sim::RunSpec& run) {
    const std::size_t periods = run.profiles.empty() ? 0 : run.profiles[0].period_count();
    OccupancyMeasurement m;
    m.move.assign(periods, 0.0);
    m.pause.assign(periods, 0.0);
    m.transition.assign(periods, 0.0);
    std::vector<double> total(periods, 0.0);
    std::size_t max_communities = 0;
    for (const auto& p : run.profiles)
        for (const auto& period : p.schedule)
            max_communities = std::max(max_communities, period.community_count());
    m.move_by_community.assign(periods, std::vector<double>(max_communities, 0.0));
    m.pause_by_community.assign(periods, std::vector<double>(max_communities, 0.0));

    sim::generate(run, [&](std::size_t, const Sample& s) {
        total[s.period] += 1.0;
        switch (s.phase) {
            case sim::Phase::MOVING:
                m.move[s.period] += 1.0;
                m.move_by_community[s.period][s.community] += 1.0;
                break;
            case sim::Phase::PAUSED:
                m.pause[s.period] += 1.0;
                m.pause_by_community[s.period][s.community] += 1.0;
                break;
            case sim::Phase::TRANSITIONAL:
                m.transition[s.period] += 1.0;
                break;
        }
        return true;
    });
    for (std::size_t t = 0; t < periods; ++t) {
        if (total[t] <= 0.0) continue;
        m.move[t] /= total[t];
        m.pause[t] /= total[t];
        m.transition[t] /= total[t];
        for (auto& v : m.move_by_community[t]) v /= total[t];
        for (auto& v : m.pause_by_community[t]) v /= total[t];
    }
    return m;
}

ContactReport contact_statistics(std::vector<ContactEvent> events) {
    std::sort(events.begin(), events.end(), [](const ContactEvent& a, const ContactEvent& b) {
        if (a.a != b.a) return a.a < b.a;
        if (a.b != b.b) return a.b < b.b;
        return a.start < b.start;
    });
    ContactReport report;
    std::vector<double> durations;
    std::vector<double> gaps;
    for (std::size_t i = 0; i < events.size(); ++i) {
        durations.push_back(events[i].end - events[i].start);
        if (i > 0 && events[i - 1].a == events[i].a && events[i - 1].b == events[i].b)
            gaps.push_back(events[i].start - events[i - 1].end);
    }
    report.events = std::move(events);
    report.durations = make_ecdf(std::move(durations));
    report.inter_meeting = make_ecdf(std::move(gaps));
    return report;
}

// --- CSV ----------------------------------------------------------------------

std::string to_csv(const PreferenceReport& r) {
    std::ostringstream out;
    out << "rank,fraction\n";
    for (std::size_t i = 0; i < r.mean_curve.size(); ++i)
        out << (i + 1) << ',' << r.mean_curve[i] << '\n';
    return out.str();
}

std::string to_csv(const ReappearanceCurve& r) {
    std::ostringstream out;
    out << "gap_h,probability\n";
    for (std::size_t i = 0; i < r.gaps.size(); ++i)
        out << r.gaps[i] / 3600.0 << ',' << r.probabilities[i] << '\n';
    return out.str();
}

std::string to_csv(const Ecdf& e, const std::string& value_name) {
    std::ostringstream out;
    out << value_name << ",cdf\n";
    for (std::size_t i = 0; i < e.values.size(); ++i)
        out << e.values[i] << ',' << e.fractions[i] << '\n';
    return out.str();
}

}  // namespace tvc::stats
