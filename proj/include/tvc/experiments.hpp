#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tvc/analytics.hpp"
#include "tvc/model.hpp"
#include "tvc/simulator.hpp"

namespace tvc::experiments {

struct SiParams {
    std::vector<double> group_sizes;              // M_g
    std::vector<std::vector<double>> beta;        // symmetric pairwise contact rates
    std::vector<double> initial_infected;         // I_g(0)

    double total() const;
};

struct EpidemicCurve {
    double step = 0.0;
    std::vector<double> t;
    std::vector<double> infected;  // total I(t)
};

// Fixed-step RK4 integration of dI_g/dt = (M_g - I_g) * sum_h beta[g][h] I_h.
// Verifies convergence by halving the step; throws STEP_TOO_COARSE if the
// final value moves by more than 0.1%.
EpidemicCurve si_solve(const SiParams& params, double horizon, double step);

// Trace-driven epidemic spread: infected nodes convert susceptible nodes
// within K at every sample. source < 0 picks a uniform source per trial.
EpidemicCurve epidemic_simulate(const sim::RunSpec& run, double k_range, long source,
                                std::size_t trials);

struct ForwardingResult {
    double success_rate = 0.0;
    std::size_t trials = 0;
    std::size_t attach_failures = 0;
};

// Greedy geographic forwarding over snapshots of a generated run: attach to
// the nearest on-node within K of src, repeatedly forward to the neighbor
// strictly closer to dst, succeed when a node within K of dst is reached.
ForwardingResult greedy_forwarding_success(const sim::RunSpec& run, double k_range,
                                           geometry::Vec2 src, geometry::Vec2 dst,
                                           std::size_t trials);

// Node population assembled from group prototypes in fixed proportions.
struct PopulationTemplate {
    std::vector<model::NodeProfile> groups;
    std::vector<double> weights;  // group share of the population, sums to 1

    std::vector<model::NodeProfile> build(std::size_t total) const;
};

// Re-times a single-period profile onto the period durations of `reference`,
// so snapshot quantities can be compared across schedules. The profile's
// behavior is unchanged (its one period simply repeats).
model::NodeProfile align_schedule(const model::NodeProfile& single_period,
                                  const model::NodeProfile& reference);

// Smallest population size whose analytic average degree, observed by
// `probe`, reaches reference_degree. The degree is affine in the node count,
// so this solves directly and rounds up. A single-period probe is re-timed
// onto the target's schedule automatically.
std::size_t nodes_needed(const PopulationTemplate& target, const model::NodeProfile& probe,
                         analytics::CommRange k, double reference_degree);

std::string to_csv(const EpidemicCurve& curve);

}  // namespace tvc::experiments
