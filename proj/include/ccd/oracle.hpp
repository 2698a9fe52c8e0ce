#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <vector>

#include "ccd/optim.hpp"

namespace ccd {

struct GridPoint {
    InterventionSet set;
    SemSample outcome;  // outcome.total is the mean objective
};

struct OracleResult {
    std::size_t t = 0;
    InterventionSet best_set = InterventionSet::P(0.0);
    double y_star = 0.0;
    SemSample best_outcome{};
    std::size_t grid_resolution = 0;
    std::vector<GridPoint> full_grid;
};

/// Evaluates every nonempty subset of {P, I} on a uniform grid of
/// `resolution` points per dimension over [0, 1], all with the same
/// objective seed. Ties go to the first point in enumeration order
/// ({P}, {P,I}, {I}; values ascending).
OracleResult grid_search_optimum(const ScenarioConfig& config, std::shared_ptr<const NetworkGraph> graph,
                                 std::size_t t, const InterventionHistory& history, std::size_t resolution,
                                 std::size_t n_rollouts, std::uint64_t seed);

/// Oracle over successive slices; each slice's optimum is applied before the next.
std::vector<OracleResult> oracle_sequence(const ScenarioConfig& config, std::shared_ptr<const NetworkGraph> graph,
                                          const std::vector<std::size_t>& slices, std::size_t resolution,
                                          std::size_t n_rollouts, const std::function<std::uint64_t(std::size_t)>& seed_for);

/// The optima as an applied-intervention history (the ground-truth path).
InterventionHistory oracle_path(const std::vector<OracleResult>& results);

/// CSV: t,set,p_value,i_value,mean_objective,best. Each slice ends with a
/// copy of its optimum flagged best=1.
void write_oracle_csv(std::ostream& out, const std::vector<OracleResult>& results);

}  // namespace ccd
