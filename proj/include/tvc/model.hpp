#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tvc/error.hpp"
#include "tvc/geometry.hpp"

namespace tvc::model {

using geometry::Rect;

// Numerical constants of the model math.
inline constexpr double kRowSumTolerance = 1e-9;
inline constexpr double kStationaryResidual = 1e-12;
// Mean distance from a uniformly random point of a square with edge N to its
// center, as a fraction of N. Used for the expected length of a transitional
// epoch that starts from a roaming state.
inline constexpr double kRoamingTransitFactor = 0.3826;

struct FieldSpec {
    double edge_length = 0.0;  // N, meters

    Rect rect() const { return {0.0, 0.0, edge_length, edge_length}; }
};

struct SpeedRange {
    double v_min = 0.0;
    double v_max = 0.0;

    double mean() const { return 0.5 * (v_min + v_max); }
};

// Placement of a community that is deferred to generation time.
enum class Placement { FIXED, RANDOM };

struct Community {
    std::string id;
    Rect rect;                           // meaningful when placement == FIXED
    double edge_length = 0.0;            // C
    bool is_roaming = false;             // community == whole field
    Placement placement = Placement::FIXED;
    std::optional<SpeedRange> speed;     // per-community override
};

struct TimePeriod {
    double duration = 0.0;                       // T^t, seconds
    std::vector<Community> communities;          // size S^t
    std::vector<std::vector<double>> transition; // p^t, row-stochastic, S^t x S^t
    std::vector<double> mean_epoch_length;       // L-bar_j^t per community
    std::vector<double> max_pause;               // D_max,j^t per community
    SpeedRange speed;                            // period default speed range

    std::size_t community_count() const { return communities.size(); }
    SpeedRange speed_of(std::size_t j) const {
        return communities[j].speed ? *communities[j].speed : speed;
    }
    double mean_speed_of(std::size_t j) const { return speed_of(j).mean(); }
    // Expected pause: pauses are uniform on [0, D_max].
    double mean_pause_of(std::size_t j) const { return 0.5 * max_pause[j]; }
};

enum class OnOffKind { ALWAYS_ON, ON_WHEN_PAUSED, ON_WHEN_MOVING, FIXED_PROB };

struct OnOffPolicy {
    OnOffKind kind = OnOffKind::ALWAYS_ON;
    // Per-community on probability, parallel to each period's community list.
    // Only used with FIXED_PROB.
    std::vector<std::vector<double>> p_on;
};

struct NodeProfile {
    std::string id;
    FieldSpec field;
    std::vector<TimePeriod> schedule;  // one repeating cycle, length V
    OnOffPolicy onoff;

    std::size_t period_count() const { return schedule.size(); }
    double cycle_duration() const;
    // Index of the period active at absolute time t (cycle-periodic).
    std::size_t period_at(double t) const;
    bool has_unresolved_placement() const;
};

// Closed-form state occupancy probabilities for one period of one profile.
struct StateProbabilities {
    std::vector<double> pi;       // stationary community probabilities
    std::vector<double> p_move;   // P_move,j
    std::vector<double> p_pause;  // P_pause,j
    double p_transition = 0.0;    // P_tr
    double normalizer = 0.0;      // Psi
    // Expected transitional length from community k to community n.
    std::vector<std::vector<double>> transit_length;

    double p_state(std::size_t j) const { return p_move[j] + p_pause[j]; }
    std::size_t community_count() const { return pi.size(); }
};

// Validates every type invariant (field, communities, matrix rows,
// irreducibility, policy bounds). Throws INVARIANT_ERROR naming the
// offending node/period/community.
void validate(const NodeProfile& profile);

// Unique stationary vector of an irreducible row-stochastic matrix, solved to
// residual below kStationaryResidual. Throws REDUCIBLE_CHAIN when the chain
// has no unique stationary distribution.
std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& p);

struct TransitLength {
    double mean = 0.0;
    double std_error = 0.0;  // 0 for the closed-form branches
};

// Expected length of a transitional epoch from `from` to `to`:
//   0 when `to` contains `from`; kRoamingTransitFactor * N when `from` is
//   roaming; otherwise a Monte Carlo mean of the distance between uniform
//   points of the two rectangles.
TransitLength expected_transitional_length(const Community& from, const Community& to,
                                           const FieldSpec& field, std::size_t samples = 100000,
                                           std::uint64_t seed = 0x7712);

StateProbabilities state_probabilities(const NodeProfile& profile, std::size_t period_index);

// P_on for community j of period t under the profile's policy.
double on_probability(const NodeProfile& profile, std::size_t period_index, std::size_t j);
double on_probability(const OnOffPolicy& policy, std::size_t period_index, std::size_t j,
                      double mean_pause, double mean_epoch_length, double mean_speed);

// Predicted peak of the re-appearance probability curve at a one-cycle lag:
// sum over periods of (T^t / sum T) * sum_j (P_j^t)^2 (P_on,j^t)^2.
double reappearance_peak(const NodeProfile& profile);

// Expands "count" templates, resolves random placements with the given seed,
// and validates the result. The seed only matters when a profile uses random
// placement.
std::vector<NodeProfile> materialize(const std::vector<NodeProfile>& templates,
                                     std::uint64_t seed);

// n copies of one profile with ids id#0..id#n-1 (random placements re-drawn
// per copy at materialize time).
std::vector<NodeProfile> replicate(const NodeProfile& prototype, std::size_t n);

}  // namespace tvc::model
