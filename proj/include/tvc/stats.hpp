#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tvc/model.hpp"
#include "tvc/simulator.hpp"

namespace tvc::stats {

// Inverse of the simulator's CSV emit. Validates the header, field count and
// per-node monotone timestamps; throws PARSE_ERROR (with line number) or
// NON_MONOTONE_TIME.
sim::Trace ingest_csv(std::istream& in);

struct RankedPreference {
    std::string node;
    std::vector<double> fractions;  // non-increasing, sums to 1 when non-empty
    bool always_off = false;
};

struct PreferenceReport {
    std::vector<RankedPreference> per_node;
    std::vector<double> mean_curve;  // rank-wise mean across nodes with on-time
};

// Fraction of on-time per grid cell (cell size g), ranked descending and
// normalized per node. g must divide the field edge.
PreferenceReport visiting_preference(const sim::Trace& trace, double field_edge, double cell_size);

struct ReappearanceCurve {
    std::vector<double> gaps;           // seconds
    std::vector<double> probabilities;  // same-cell-and-on probability per gap
};

// Probability that a node is observed ("on") in the same grid cell at both t
// and t + gap, over all nodes and sample times with both instants inside the
// trace. Counting all time pairs in the denominator keeps the estimator
// comparable with the closed-form peak, which carries the on-probabilities.
ReappearanceCurve reappearance_curve(const sim::Trace& trace, double field_edge, double cell_size,
                                     const std::vector<double>& gaps);

struct ContactEvent {
    std::size_t a = 0;
    std::size_t b = 0;
    double start = 0.0;
    double end = 0.0;  // half-open [start, end)
};

struct Ecdf {
    std::vector<double> values;     // sorted
    std::vector<double> fractions;  // non-decreasing, ends at 1
};

Ecdf make_ecdf(std::vector<double> samples);

struct ContactReport {
    std::vector<ContactEvent> events;
    Ecdf durations;
    Ecdf inter_meeting;  // gap from contact end to the pair's next start
};

// Contacts = maximal runs of samples with Euclidean distance <= K (closed
// threshold) and both nodes on.
ContactReport contacts(const sim::Trace& trace, double k_range);

struct DegreeStats {
    std::vector<double> per_node;  // time-averaged neighbor count
    double mean = 0.0;
};

// Mean over samples of the number of other on-nodes within K.
DegreeStats empirical_node_degree(const sim::Trace& trace, double k_range);

struct MonteCarloTime {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t iterations = 0;
    std::size_t timeouts = 0;   // capped iterations, excluded from the mean
    std::vector<double> samples;
};

// Per iteration: fresh derived seed, uniform random target, stationary
// start; walk until an on-phase position is within K of the target.
MonteCarloTime empirical_hitting_time(const model::NodeProfile& profile, double k_range,
                                      std::size_t iterations, std::uint64_t seed,
                                      double timeout_cap = 0.0);

// Two walkers in lockstep until both are on and within K of each other.
MonteCarloTime empirical_meeting_time(const model::NodeProfile& a, const model::NodeProfile& b,
                                      double k_range, std::size_t iterations, std::uint64_t seed,
                                      double timeout_cap = 0.0);

// Time fractions spent (moving, paused, transitional) per period type,
// pooled over all nodes of the run. Used to cross-validate the closed-form
// state occupancies.
struct OccupancyMeasurement {
    std::vector<double> move;        // indexed by period
    std::vector<double> pause;
    std::vector<double> transition;
    // Fine-grained: fraction in (period, community) while moving or paused.
    std::vector<std::vector<double>> move_by_community;
    std::vector<std::vector<double>> pause_by_community;
};

OccupancyMeasurement measure_occupancy(const sim::RunSpec& run);

// Curve CSV helpers (rank,fraction / gap_h,probability / value,cdf).
std::string to_csv(const PreferenceReport& r);
std::string to_csv(const ReappearanceCurve& r);
std::string to_csv(const Ecdf& e, const std::string& value_name);

// Generic contact log: one "a,b,start_s,end_s" row per encounter, for
// externally collected traces.
std::vector<ContactEvent> ingest_contact_csv(std::istream& in);

// Duration and inter-meeting distributions of an encounter log (per-pair
// gaps between consecutive contacts, end to next start).
ContactReport contact_statistics(std::vector<ContactEvent> events);

}  // namespace tvc::stats
