#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ccd/experiment.hpp"

namespace ccd {

struct BandPoint {
    double cost = 0.0;
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation across replicates; 0 for one replicate
    std::size_t replicates = 0;
};

/// A replicate's (cumulative cost, best-so-far) steps, in trial order.
using CostCurve = std::vector<std::pair<double, double>>;

/// Best-so-far at cumulative cost x is the last step with cost <= x. The band
/// is sampled at every integer cost from the largest first-trial cost to the
/// smallest final cost, so every replicate is defined everywhere on it.
std::vector<BandPoint> convergence_band(const std::vector<CostCurve>& replicates);

/// Best-so-far of one curve at cumulative cost x; nullopt before its first trial.
std::optional<double> best_at_cost(const CostCurve& curve, double cost);

/// (method, t) -> one curve per replicate, in replicate order.
std::map<std::pair<Method, std::size_t>, std::vector<CostCurve>> group_curves(const std::vector<TraceRow>& rows);

/// One panel per slice: mean best-so-far against cumulative cost per method,
/// a +-1 sd band, and a dashed line at y*_t when known.
std::string render_convergence_svg(const std::vector<TraceRow>& rows,
                                   const std::vector<std::pair<std::size_t, double>>& optima);

}  // namespace ccd
