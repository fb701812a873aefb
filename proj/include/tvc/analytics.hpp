#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tvc/geometry.hpp"
#include "tvc/model.hpp"

namespace tvc::analytics {

using geometry::Arrangement;
using geometry::Rect;

inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

struct CommRange {
    double range = 0.0;  // K, meters

    explicit CommRange(double k);
};

// Per-period effective states of a node for the snapshot quantities: every
// non-roaming community keeps its own rectangle, while roaming and
// transitional time merge into one field-sized pseudo community.
struct EffectiveState {
    Rect rect;
    double area = 0.0;      // C^2 (or N^2 for the field state)
    double p_state = 0.0;   // P_j (or P_roam + P_tr)
};

struct DegreeContribution {
    std::size_t period = 0;
    std::string peer;
    std::size_t own_state = 0;
    std::size_t peer_state = 0;
    double value = 0.0;  // already weighted by state and period probabilities
};

struct DegreeReport {
    std::string node;
    double expected_degree = 0.0;
    std::vector<DegreeContribution> contributions;
};

// Eq.-level building block: probability contribution of peer state k to the
// degree of node a in state j, pi K^2 / C_j^2(a) * A(a_j, b_k) / C_k^2(b).
double pairwise_degree_contribution(const Rect& a_comm, const Rect& b_comm, double k_range);

// Average node degree of `node` against all `peers` (excluding itself if
// present), time-weighted across periods by T^t / sum T.
DegreeReport average_node_degree(const model::NodeProfile& node,
                                 const std::vector<model::NodeProfile>& peers, CommRange k);

struct PeriodHit {
    double p_unit = 0.0;    // P_h^t(w^t)
    double p_period = 0.0;  // P_H^t(w^t)
    bool short_period = false;  // P_h * T < 1: the plain 1/P_h tail is unreliable
};

struct CellHitting {
    std::uint32_t membership = 0;
    double probability = 0.0;  // P(w^1..w^V) = area / N^2
    std::vector<PeriodHit> periods;
    double cycle_probability = 0.0;  // P
    double expected_time = 0.0;      // conditional HT for this cell
    double expected_time_tail_approx = 0.0;  // same, with the plain 1/P_h tail
};

struct HittingReport {
    std::string node;
    double k_range = 0.0;
    double expected_time = 0.0;        // overall HT (may be +inf)
    double expected_time_tail_approx = 0.0;  // overall HT with the raw tail term
    std::vector<CellHitting> cells;
    Arrangement arrangement;
    bool any_short_period = false;
};

// Unit-time hitting probability for one membership vector: sum over
// communities containing the target of P_move,j * 2 K v_j / C_j^2. Membership
// bits follow the flat (period, community) order used by hitting_time's
// arrangement.
double unit_hitting_probability(const model::NodeProfile& node,
                                const model::StateProbabilities& probs,
                                std::uint32_t membership, std::size_t period_index,
                                double k_range);

// Expected hitting time of a uniformly placed target, via the scenario-cell
// decomposition. Throws NO_HIT_POSSIBLE when no cell can ever be hit.
HittingReport hitting_time(const model::NodeProfile& node, CommRange k);

struct PeriodMeeting {
    double p_unit = 0.0;    // P_m^t
    double p_period = 0.0;  // P_M^t
    bool short_period = false;
};

struct MeetingReport {
    std::string node_a;
    std::string node_b;
    double k_range = 0.0;
    double v_hat = 0.0;
    std::vector<PeriodMeeting> periods;
    double cycle_probability = 0.0;    // Q
    double expected_time = 0.0;        // MT (may be +inf)
    double expected_time_tail_approx = 0.0;  // MT with the raw tail term
};

// Unit-time meeting probability for one period: move-move (with the relative
// speed factor v_hat), move-pause and pause-move terms summed over all
// community pairs with positive overlap. Roaming states enter as field-sized
// communities; transitional time is dropped.
double unit_meeting_probability(const model::NodeProfile& a, const model::NodeProfile& b,
                                std::size_t period_index, double k_range, double v_hat);

// Expected meeting time for fixed community placements.
// Throws NO_MEETING_POSSIBLE when the cycle meeting probability is 0.
MeetingReport meeting_time(const model::NodeProfile& a, const model::NodeProfile& b, CommRange k);

struct OverlapEstimate {
    double p_overlap = 0.0;
    double mean_area_given_overlap = 0.0;
    double std_error_p = 0.0;
    double std_error_area = 0.0;
};

// Monte Carlo overlap probability and conditional mean overlap area for two
// square communities placed independently and uniformly in the field.
OverlapEstimate estimate_overlap_probability(double edge_a, double edge_b,
                                             const model::FieldSpec& field, std::size_t samples,
                                             std::uint64_t seed = 0x5EED);

// Report serialization for the CLI (JSON text / CSV rows).
std::string to_json(const DegreeReport& r);
std::string to_json(const HittingReport& r);
std::string to_json(const MeetingReport& r);
std::string to_csv(const DegreeReport& r);
std::string to_csv(const HittingReport& r);
std::string to_csv(const MeetingReport& r);

}  // namespace tvc::analytics
