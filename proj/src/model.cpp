#include "tvc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tvc/rng.hpp"

namespace tvc::model {

namespace {

std::string where(const NodeProfile& p, std::size_t t) {
    return "node '" + p.id + "' period " + std::to_string(t);
}

std::string where(const NodeProfile& p, std::size_t t, std::size_t j) {
    return where(p, t) + " community " + std::to_string(j) + " ('" +
           p.schedule[t].communities[j].id + "')";
}

// Strong connectivity of the positive-entry digraph; irreducibility for a
// stochastic matrix.
bool irreducible(const std::vector<std::vector<double>>& p) {
    const std::size_t n = p.size();
    auto reach_all = [&](bool transpose) {
        std::vector<char> seen(n, 0);
        std::vector<std::size_t> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < n; ++j) {
                const double w = transpose ? p[j][i] : p[i][j];
                if (w > 0.0 && !seen[j]) {
                    seen[j] = 1;
                    stack.push_back(j);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    };
    return reach_all(false) && reach_all(true);
}

}  // namespace

double NodeProfile::cycle_duration() const {
    double total = 0.0;
    for (const auto& p : schedule) total += p.duration;
    return total;
}

std::size_t NodeProfile::period_at(double t) const {
    const double cycle = cycle_duration();
    double u = std::fmod(t, cycle);
    if (u < 0.0) u += cycle;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (u < schedule[i].duration) return i;
        u -= schedule[i].duration;
    }
    return schedule.size() - 1;
}

bool NodeProfile::has_unresolved_placement() const {
    for (const auto& p : schedule)
        for (const auto& c : p.communities)
            if (c.placement == Placement::RANDOM) return true;
    return false;
}

void validate(const NodeProfile& profile) {
    const double n = profile.field.edge_length;
    if (!(n > 0.0))
        throw Error(ErrorCode::INVARIANT_ERROR,
                    "node '" + profile.id + "': field edge_length must be > 0");
    if (profile.schedule.empty())
        throw Error(ErrorCode::INVARIANT_ERROR, "node '" + profile.id + "': empty schedule");
    if (!(profile.cycle_duration() > 0.0))
        throw Error(ErrorCode::INVARIANT_ERROR,
                    "node '" + profile.id + "': cycle duration must be > 0");

    for (std::size_t t = 0; t < profile.schedule.size(); ++t) {
        const TimePeriod& period = profile.schedule[t];
        const std::size_t s = period.community_count();
        if (!(period.duration > 0.0))
            throw Error(ErrorCode::INVARIANT_ERROR, where(profile, t) + ": duration must be > 0");
        if (s == 0)
            throw Error(ErrorCode::INVARIANT_ERROR, where(profile, t) + ": no communities");
        if (period.transition.size() != s || period.mean_epoch_length.size() != s ||
            period.max_pause.size() != s)
            throw Error(ErrorCode::INVARIANT_ERROR,
                        where(profile, t) + ": per-community array sizes must equal " +
                            std::to_string(s));

        auto check_speed = [&](const SpeedRange& v, const std::string& at) {
            if (!(v.v_min > 0.0) || !(v.v_max >= v.v_min))
                throw Error(ErrorCode::INVARIANT_ERROR, at + ": need v_max >= v_min > 0");
        };
        check_speed(period.speed, where(profile, t));

        for (std::size_t j = 0; j < s; ++j) {
            const Community& c = period.communities[j];
            if (!(c.edge_length > 0.0))
                throw Error(ErrorCode::INVARIANT_ERROR,
                            where(profile, t, j) + ": edge length must be > 0");
            if (c.edge_length > n)
                throw Error(ErrorCode::INVARIANT_ERROR,
                            where(profile, t, j) + ": community larger than the field");
            if (c.placement == Placement::FIXED) {
                const Rect& r = c.rect;
                if (r.x0 < 0.0 || r.y0 < 0.0 || r.x1 > n || r.y1 > n || !(r.x1 > r.x0) ||
                    !(r.y1 > r.y0))
                    throw Error(ErrorCode::INVARIANT_ERROR,
                                where(profile, t, j) + ": community outside field");
                const bool covers_field = r.x0 == 0.0 && r.y0 == 0.0 && r.x1 == n && r.y1 == n;
                if (c.is_roaming != covers_field)
                    throw Error(ErrorCode::INVARIANT_ERROR,
                                where(profile, t, j) +
                                    ": is_roaming must hold exactly when the community is the "
                                    "whole field");
            }
            if (!(period.mean_epoch_length[j] > 0.0))
                throw Error(ErrorCode::INVARIANT_ERROR,
                            where(profile, t, j) + ": mean epoch length must be > 0");
            if (period.max_pause[j] < 0.0)
                throw Error(ErrorCode::INVARIANT_ERROR,
                            where(profile, t, j) + ": max pause must be >= 0");
            if (c.speed) check_speed(*c.speed, where(profile, t, j));

            const auto& row = period.transition[j];
            if (row.size() != s)
                throw Error(ErrorCode::INVARIANT_ERROR,
                            where(profile, t, j) + ": transition row size != " + std::to_string(s));
            double sum = 0.0;
            for (double v : row) {
                if (v < 0.0)
                    throw Error(ErrorCode::INVARIANT_ERROR,
                                where(profile, t, j) + ": negative transition probability");
                sum += v;
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance)
                throw Error(ErrorCode::INVARIANT_ERROR,
                            where(profile, t, j) + ": row sum != 1 (got " + std::to_string(sum) +
                                ")");
        }
        if (!irreducible(period.transition))
            throw Error(ErrorCode::INVARIANT_ERROR,
                        where(profile, t) + ": transition matrix is reducible");

        if (profile.onoff.kind == OnOffKind::FIXED_PROB) {
            if (profile.onoff.p_on.size() != profile.schedule.size() ||
                profile.onoff.p_on[t].size() != s)
                throw Error(ErrorCode::INVARIANT_ERROR,
                            where(profile, t) + ": p_on must list one value per community");
            for (double v : profile.onoff.p_on[t])
                if (v < 0.0 || v > 1.0)
                    throw Error(ErrorCode::INVARIANT_ERROR,
                                where(profile, t) + ": p_on outside [0,1]");
        }
    }
}

std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& p) {
    const std::size_t n = p.size();
    if (n == 0) throw Error(ErrorCode::REDUCIBLE_CHAIN, "empty matrix");
    for (const auto& row : p)
        if (row.size() != n) throw Error(ErrorCode::REDUCIBLE_CHAIN, "matrix not square");
    if (!irreducible(p))
        throw Error(ErrorCode::REDUCIBLE_CHAIN, "chain is not irreducible");
    if (n == 1) return {1.0};

    // Solve pi (P - I) = 0 with the normalization sum pi = 1 replacing the
    // last balance equation: columns of A are (P^T - I) rows, last row ones.
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a[i][j] = p[j][i] - (i == j ? 1.0 : 0.0);
        a[i][n] = 0.0;
    }
    for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = 1.0;
    a[n - 1][n] = 1.0;

    // Gaussian elimination with partial pivoting; n is tiny.
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-14)
            throw Error(ErrorCode::REDUCIBLE_CHAIN, "no unique stationary vector");
        std::swap(a[col], a[pivot]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
        }
    }
    std::vector<double> pi(n);
    for (std::size_t i = 0; i < n; ++i) pi[i] = a[i][n] / a[i][i];

    // One step of iterative refinement tightens the residual to ~1e-16.
    for (int iter = 0; iter < 2; ++iter) {
        std::vector<double> next(n, 0.0);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) next[j] += pi[i] * p[i][j];
        const double total = std::accumulate(next.begin(), next.end(), 0.0);
        for (auto& v : next) v /= total;
        pi = std::move(next);
    }

    double residual = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double pj = 0.0;
        for (std::size_t i = 0; i < n; ++i) pj += pi[i] * p[i][j];
        residual = std::max(residual, std::abs(pj - pi[j]));
    }
    if (residual >= kStationaryResidual)
        throw Error(ErrorCode::REDUCIBLE_CHAIN,
                    "stationary solve residual " + std::to_string(residual));
    for (double v : pi)
        if (!(v > 0.0))
            throw Error(ErrorCode::REDUCIBLE_CHAIN, "stationary vector has a zero entry");
    return pi;
}

TransitLength expected_transitional_length(const Community& from, const Community& to,
                                           const FieldSpec& field, std::size_t samples,
                                           std::uint64_t seed) {
    if (to.rect.contains(from.rect)) return {0.0, 0.0};
    if (from.is_roaming) return {kRoamingTransitFactor * field.edge_length, 0.0};

    Rng rng(seed);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double ax = rng.uniform(from.rect.x0, from.rect.x1);
        const double ay = rng.uniform(from.rect.y0, from.rect.y1);
        const double bx = rng.uniform(to.rect.x0, to.rect.x1);
        const double by = rng.uniform(to.rect.y0, to.rect.y1);
        const double d = std::hypot(bx - ax, by - ay);
        sum += d;
        sum_sq += d * d;
    }
    const double n = static_cast<double>(samples);
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    return {mean, std::sqrt(var / n)};
}

StateProbabilities state_probabilities(const NodeProfile& profile, std::size_t period_index) {
    const TimePeriod& period = profile.schedule.at(period_index);
    const std::size_t s = period.community_count();

    StateProbabilities out;
    out.pi = stationary_distribution(period.transition);
    out.p_move.assign(s, 0.0);
    out.p_pause.assign(s, 0.0);
    out.transit_length.assign(s, std::vector<double>(s, 0.0));

    for (std::size_t k = 0; k < s; ++k)
        for (std::size_t n = 0; n < s; ++n)
            out.transit_length[k][n] =
                expected_transitional_length(period.communities[k], period.communities[n],
                                             profile.field, 100000,
                                             Rng::derive(0x7712, k * 131 + n))
                    .mean;

    // Psi = sum_k pi_k (L_k / v_k + D_k + sum_n p_kn Ltr(k,n) / v_k)
    double psi = 0.0;
    double transit_time = 0.0;
    for (std::size_t k = 0; k < s; ++k) {
        const double v = period.mean_speed_of(k);
        const double move_time = period.mean_epoch_length[k] / v;
        const double pause_time = period.mean_pause_of(k);
        double tr = 0.0;
        for (std::size_t n = 0; n < s; ++n)
            tr += period.transition[k][n] * out.transit_length[k][n] / v;
        psi += out.pi[k] * (move_time + pause_time + tr);
        transit_time += out.pi[k] * tr;
    }
    out.normalizer = psi;
    for (std::size_t j = 0; j < s; ++j) {
        const double v = period.mean_speed_of(j);
        out.p_move[j] = out.pi[j] * (period.mean_epoch_length[j] / v) / psi;
        out.p_pause[j] = out.pi[j] * period.mean_pause_of(j) / psi;
    }
    out.p_transition = transit_time / psi;
    return out;
}

double on_probability(const OnOffPolicy& policy, std::size_t period_index, std::size_t j,
                      double mean_pause, double mean_epoch_length, double mean_speed) {
    switch (policy.kind) {
        case OnOffKind::ALWAYS_ON:
            return 1.0;
        case OnOffKind::ON_WHEN_PAUSED: {
            const double move_time = mean_epoch_length / mean_speed;
            const double total = mean_pause + move_time;
            return total > 0.0 ? mean_pause / total : 0.0;
        }
        case OnOffKind::ON_WHEN_MOVING: {
            const double move_time = mean_epoch_length / mean_speed;
            const double total = mean_pause + move_time;
            return total > 0.0 ? move_time / total : 1.0;
        }
        case OnOffKind::FIXED_PROB:
            return policy.p_on.at(period_index).at(j);
    }
    return 1.0;
}

double on_probability(const NodeProfile& profile, std::size_t period_index, std::size_t j) {
    const TimePeriod& period = profile.schedule.at(period_index);
    return on_probability(profile.onoff, period_index, j, period.mean_pause_of(j),
                          period.mean_epoch_length[j], period.mean_speed_of(j));
}

double reappearance_peak(const NodeProfile& profile) {
    const double cycle = profile.cycle_duration();
    double peak = 0.0;
    for (std::size_t t = 0; t < profile.period_count(); ++t) {
        const StateProbabilities probs = state_probabilities(profile, t);
        double inner = 0.0;
        for (std::size_t j = 0; j < probs.community_count(); ++j) {
            const double pj = probs.p_state(j);
            const double on = on_probability(profile, t, j);
            inner += pj * pj * on * on;
        }
        peak += (profile.schedule[t].duration / cycle) * inner;
    }
    return peak;
}

namespace {

// Random placement per the grid recipe: the field is divided into
// edge-length-sized cells and the community takes a uniformly chosen cell.
// When the edge does not divide the field, the origin falls back to a
// continuous uniform draw over [0, N - C].
Rect draw_placement(double edge, double field_edge, Rng& rng) {
    const double cells = field_edge / edge;
    const double whole = std::round(cells);
    if (std::abs(cells - whole) < 1e-9 && whole >= 1.0) {
        const auto per_axis = static_cast<std::uint64_t>(whole);
        const double x = static_cast<double>(rng.below(per_axis)) * edge;
        const double y = static_cast<double>(rng.below(per_axis)) * edge;
        return {x, y, x + edge, y + edge};
    }
    const double x = rng.uniform(0.0, field_edge - edge);
    const double y = rng.uniform(0.0, field_edge - edge);
    return {x, y, x + edge, y + edge};
}

}  // namespace

std::vector<NodeProfile> materialize(const std::vector<NodeProfile>& templates,
                                     std::uint64_t seed) {
    std::vector<NodeProfile> out;
    out.reserve(templates.size());
    std::uint64_t placement_counter = 0;
    for (const auto& tmpl : templates) {
        NodeProfile node = tmpl;
        for (auto& period : node.schedule) {
            for (auto& community : period.communities) {
                if (community.placement != Placement::RANDOM) continue;
                Rng rng(Rng::derive(seed, 0xC0117EC7 + placement_counter++));
                community.rect =
                    draw_placement(community.edge_length, node.field.edge_length, rng);
                community.is_roaming = community.edge_length == node.field.edge_length;
                community.placement = Placement::FIXED;
            }
        }
        validate(node);
        out.push_back(std::move(node));
    }
    return out;
}

std::vector<NodeProfile> replicate(const NodeProfile& prototype, std::size_t n) {
    std::vector<NodeProfile> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        NodeProfile copy = prototype;
        copy.id = prototype.id + "#" + std::to_string(i);
        out.push_back(std::move(copy));
    }
    return out;
}

}  // namespace tvc::model
