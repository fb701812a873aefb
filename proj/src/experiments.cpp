#include "tvc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tvc/rng.hpp"
#include "tvc/stats.hpp"

namespace tvc::experiments {

double SiParams::total() const {
    return std::accumulate(group_sizes.begin(), group_sizes.end(), 0.0);
}

namespace {

void validate_si(const SiParams& p) {
    const std::size_t g = p.group_sizes.size();
    if (g == 0 || p.beta.size() != g || p.initial_infected.size() != g)
        throw Error(ErrorCode::INVARIANT_ERROR, "si params: group arrays must align");
    for (std::size_t i = 0; i < g; ++i) {
        if (p.beta[i].size() != g)
            throw Error(ErrorCode::INVARIANT_ERROR, "si params: beta must be square");
        for (std::size_t j = 0; j < g; ++j) {
            if (p.beta[i][j] < 0.0)
                throw Error(ErrorCode::INVARIANT_ERROR, "si params: beta entries must be >= 0");
            if (std::abs(p.beta[i][j] - p.beta[j][i]) > 1e-12)
                throw Error(ErrorCode::INVARIANT_ERROR, "si params: beta must be symmetric");
        }
        if (p.initial_infected[i] < 0.0 || p.initial_infected[i] > p.group_sizes[i])
            throw Error(ErrorCode::INVARIANT_ERROR,
                        "si params: initial infected outside [0, M_g]");
    }
}

std::vector<double> si_derivative(const SiParams& p, const std::vector<double>& infected) {
    const std::size_t g = p.group_sizes.size();
    std::vector<double> d(g, 0.0);
    for (std::size_t i = 0; i < g; ++i) {
        const double susceptible = p.group_sizes[i] - infected[i];
        double force = 0.0;
        for (std::size_t j = 0; j < g; ++j) force += p.beta[i][j] * infected[j];
        d[i] = susceptible * force;
    }
    return d;
}

double si_integrate(const SiParams& p, double horizon, double step, EpidemicCurve* curve) {
    const std::size_t g = p.group_sizes.size();
    std::vector<double> infected = p.initial_infected;
    auto record = [&](double t) {
        if (!curve) return;
        curve->t.push_back(t);
        curve->infected.push_back(std::accumulate(infected.begin(), infected.end(), 0.0));
    };
    record(0.0);
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / step - 1e-12));
    std::vector<double> tmp(g), k1, k2, k3, k4;
    for (std::size_t s = 0; s < steps; ++s) {
        const double h = std::min(step, horizon - static_cast<double>(s) * step);
        k1 = si_derivative(p, infected);
        for (std::size_t i = 0; i < g; ++i) tmp[i] = infected[i] + 0.5 * h * k1[i];
        k2 = si_derivative(p, tmp);
        for (std::size_t i = 0; i < g; ++i) tmp[i] = infected[i] + 0.5 * h * k2[i];
        k3 = si_derivative(p, tmp);
        for (std::size_t i = 0; i < g; ++i) tmp[i] = infected[i] + h * k3[i];
        k4 = si_derivative(p, tmp);
        for (std::size_t i = 0; i < g; ++i) {
            infected[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            infected[i] = std::min(infected[i], p.group_sizes[i]);
        }
        record(static_cast<double>(s + 1) * step);
    }
    return std::accumulate(infected.begin(), infected.end(), 0.0);
}

}  // namespace

EpidemicCurve si_solve(const SiParams& params, double horizon, double step) {
    validate_si(params);
    if (!(step > 0.0) || !(horizon > 0.0))
        throw Error(ErrorCode::INVARIANT_ERROR, "si solve: need positive horizon and step");

    EpidemicCurve curve;
    curve.step = step;
    const double final_value = si_integrate(params, horizon, step, &curve);
    const double final_half = si_integrate(params, horizon, 0.5 * step, nullptr);
    const double scale = std::max(std::abs(final_half), 1e-12);
    if (std::abs(final_value - final_half) / scale >= 1e-3)
        throw Error(ErrorCode::STEP_TOO_COARSE,
                    "halving the step moves the final value by >= 0.1%");
    return curve;
}

EpidemicCurve epidemic_simulate(const sim::RunSpec& run, double k_range, long source,
                                std::size_t trials) {
    const std::size_t m = run.profiles.size();
    if (m == 0) throw Error(ErrorCode::INVARIANT_ERROR, "epidemic: no nodes");
    const auto steps = static_cast<std::size_t>(std::floor(run.duration / run.dt)) + 1;
    const double k_sq = k_range * k_range;

    EpidemicCurve curve;
    curve.step = run.dt;
    curve.t.resize(steps);
    for (std::size_t s = 0; s < steps; ++s) curve.t[s] = static_cast<double>(s) * run.dt;
    curve.infected.assign(steps, 0.0);

    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::uint64_t trial_seed = Rng::derive(run.seed, 0xE91D + trial);
        std::size_t src;
        if (source >= 0 && static_cast<std::size_t>(source) < m) {
            src = static_cast<std::size_t>(source);
        } else {
            Rng pick(Rng::derive(trial_seed, 0));
            src = static_cast<std::size_t>(pick.below(m));
        }

        std::vector<sim::NodeWalker> walkers;
        walkers.reserve(m);
        for (std::size_t i = 0; i < m; ++i)
            walkers.emplace_back(run.profiles[i], sim::node_seed(trial_seed, i), run.dt);

        std::vector<char> infected(m, 0);
        infected[src] = 1;
        std::size_t infected_count = 1;
        std::vector<sim::Sample> pos(m);
        for (std::size_t s = 0; s < steps; ++s) {
            if (infected_count == m) {
                // everyone infected: the tail of the curve is flat
                for (std::size_t r = s; r < steps; ++r)
                    curve.infected[r] += static_cast<double>(m);
                break;
            }
            for (std::size_t i = 0; i < m; ++i) pos[i] = walkers[i].next_sample();
            for (std::size_t i = 0; i < m; ++i) {
                if (!infected[i] || !pos[i].on) continue;
                for (std::size_t j = 0; j < m; ++j) {
                    if (infected[j] || !pos[j].on) continue;
                    const double dx = pos[i].x - pos[j].x;
                    const double dy = pos[i].y - pos[j].y;
                    if (dx * dx + dy * dy <= k_sq) {
                        infected[j] = 2;  // newly infected, active next step
                        ++infected_count;
                    }
                }
            }
            for (auto& f : infected)
                if (f == 2) f = 1;
            curve.infected[s] += static_cast<double>(infected_count);
        }
    }
    for (auto& v : curve.infected) v /= static_cast<double>(trials);
    return curve;
}

ForwardingResult greedy_forwarding_success(const sim::RunSpec& run, double k_range,
                                           geometry::Vec2 src, geometry::Vec2 dst,
                                           std::size_t trials) {
    const std::size_t m = run.profiles.size();
    const auto steps = static_cast<std::size_t>(std::floor(run.duration / run.dt)) + 1;
    const double k_sq = k_range * k_range;

    // Snapshot times, then one pass per node collecting only those samples.
    Rng rng(Rng::derive(run.seed, 0x60F0));
    std::vector<std::size_t> snapshot(trials);
    for (auto& s : snapshot) s = static_cast<std::size_t>(rng.below(steps));
    std::vector<std::size_t> order(trials);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return snapshot[a] < snapshot[b]; });

    struct Point {
        double x, y;
        bool on;
    };
    std::vector<std::vector<Point>> at(trials, std::vector<Point>(m));
    for (std::size_t i = 0; i < m; ++i) {
        sim::NodeWalker walker(run.profiles[i], sim::node_seed(run.seed, i), run.dt);
        std::size_t next = 0;
        for (std::size_t s = 0; s < steps && next < trials; ++s) {
            const sim::Sample sample = walker.next_sample();
            while (next < trials && snapshot[order[next]] == s) {
                at[order[next]][i] = {sample.x, sample.y, sample.on};
                ++next;
            }
        }
    }

    ForwardingResult result;
    result.trials = trials;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const auto& nodes = at[trial];
        auto dist_sq = [](double ax, double ay, double bx, double by) {
            const double dx = ax - bx;
            const double dy = ay - by;
            return dx * dx + dy * dy;
        };
        // attach to the nearest on-node within K of the source coordinate
        std::size_t current = m;
        double best = k_sq;
        for (std::size_t i = 0; i < m; ++i) {
            if (!nodes[i].on) continue;
            const double d = dist_sq(nodes[i].x, nodes[i].y, src.x, src.y);
            if (d <= best) {
                best = d;
                current = i;
            }
        }
        if (current == m) {
            ++result.attach_failures;
            continue;
        }
        bool success = false;
        for (std::size_t hop = 0; hop < m; ++hop) {
            if (dist_sq(nodes[current].x, nodes[current].y, dst.x, dst.y) <= k_sq) {
                success = true;
                break;
            }
            // greedy step: the neighbor strictly closest to the destination
            const double current_dist =
                dist_sq(nodes[current].x, nodes[current].y, dst.x, dst.y);
            std::size_t next = m;
            double next_dist = current_dist;
            for (std::size_t i = 0; i < m; ++i) {
                if (i == current || !nodes[i].on) continue;
                if (dist_sq(nodes[i].x, nodes[i].y, nodes[current].x, nodes[current].y) > k_sq)
                    continue;
                const double d = dist_sq(nodes[i].x, nodes[i].y, dst.x, dst.y);
                if (d < next_dist) {
                    next_dist = d;
                    next = i;
                }
            }
            if (next == m) break;  // local minimum, no face routing fallback
            current = next;
        }
        if (success) result.success_rate += 1.0;
    }
    result.success_rate /= static_cast<double>(trials);
    return result;
}

namespace {

// Largest-remainder split of `total` across group weights.
std::vector<std::size_t> group_counts(const std::vector<double>& weights, std::size_t total) {
    std::vector<std::size_t> counts(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t g = 0; g < weights.size(); ++g) {
        const double exact = weights[g] * static_cast<double>(total);
        counts[g] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        assigned += counts[g];
        remainders.push_back({exact - std::floor(exact + 1e-9), g});
    }
    std::sort(remainders.rbegin(), remainders.rend());
    for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i, ++assigned)
        ++counts[remainders[i].second];
    return counts;
}

}  // namespace

std::vector<model::NodeProfile> PopulationTemplate::build(std::size_t total) const {
    if (groups.empty() || groups.size() != weights.size())
        throw Error(ErrorCode::INVARIANT_ERROR, "population template: groups/weights mismatch");
    const auto counts = group_counts(weights, total);
    std::vector<model::NodeProfile> out;
    out.reserve(total);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto copies = model::replicate(groups[g], counts[g]);
        out.insert(out.end(), copies.begin(), copies.end());
    }
    return out;
}

model::NodeProfile align_schedule(const model::NodeProfile& single_period,
                                  const model::NodeProfile& reference) {
    if (single_period.period_count() != 1)
        throw Error(ErrorCode::INVARIANT_ERROR,
                    "align_schedule expects a single-period profile");
    model::NodeProfile out = single_period;
    out.schedule.assign(reference.period_count(), single_period.schedule[0]);
    for (std::size_t t = 0; t < reference.period_count(); ++t)
        out.schedule[t].duration = reference.schedule[t].duration;
    return out;
}

std::size_t nodes_needed(const PopulationTemplate& target, const model::NodeProfile& probe,
                         analytics::CommRange k, double reference_degree) {
    if (!(reference_degree > 0.0)) return 1;
    // Per-node degree contribution of each group as seen by the probe; the
    // total is affine in the group counts.
    std::vector<double> per_node(target.groups.size(), 0.0);
    for (std::size_t g = 0; g < target.groups.size(); ++g) {
        model::NodeProfile one = target.groups[g];
        one.id = probe.id + "/probe-peer";
        const model::NodeProfile aligned =
            probe.period_count() == 1 && one.period_count() > 1 ? align_schedule(probe, one)
                                                                : probe;
        per_node[g] =
            analytics::average_node_degree(aligned, {std::move(one)}, k).expected_degree;
    }
    double weighted = 0.0;
    for (std::size_t g = 0; g < target.groups.size(); ++g)
        weighted += target.weights[g] * per_node[g];
    if (weighted <= 0.0)
        throw Error(ErrorCode::NO_MEETING_POSSIBLE,
                    "population never enters the probe's range");

    auto degree_at = [&](std::size_t total) {
        // evaluate with the integer group split actually used at size `total`
        const auto counts = group_counts(target.weights, total);
        double d = 0.0;
        for (std::size_t g = 0; g < counts.size(); ++g)
            d += static_cast<double>(counts[g]) * per_node[g];
        return d;
    };

    const double tolerance = reference_degree * 1e-12;
    auto m = static_cast<std::size_t>(
        std::max(1.0, std::floor(reference_degree / weighted)));
    while (degree_at(m) < reference_degree - tolerance) ++m;
    while (m > 1 && degree_at(m - 1) >= reference_degree - tolerance) --m;
    return m;
}

std::string to_csv(const EpidemicCurve& curve) {
    std::ostringstream out;
    out << "t_s,infected\n";
    for (std::size_t i = 0; i < curve.t.size(); ++i)
        out << curve.t[i] << ',' << curve.infected[i] << '\n';
    return out.str();
}

}  // namespace tvc::experiments
