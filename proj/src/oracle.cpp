#include "ccd/oracle.hpp"

#include <limits>

#include <fmt/format.h>

#include "ccd/csv.hpp"
#include "ccd/errors.hpp"

namespace ccd {

OracleResult grid_search_optimum(const ScenarioConfig& config, std::shared_ptr<const NetworkGraph> graph,
                                 std::size_t t, const InterventionHistory& history, std::size_t resolution,
                                 std::size_t n_rollouts, std::uint64_t seed) {
    if (resolution < 2) throw ValidationError("resolution", "need at least 2 grid points per dimension");
    std::vector<double> axis(resolution);
    for (std::size_t k = 0; k < resolution; ++k) axis[k] = static_cast<double>(k) / static_cast<double>(resolution - 1);

    OracleResult out;
    out.t = t;
    out.grid_resolution = resolution;
    auto visit = [&](InterventionSet set) {
        auto outcome = evaluate_intervention(config, graph, set, t, history, n_rollouts, seed);
        if (out.full_grid.empty() || outcome.total < out.y_star) {
            out.y_star = outcome.total;
            out.best_set = set;
            out.best_outcome = outcome;
        }
        out.full_grid.push_back({std::move(set), outcome});
    };
    for (auto kind : kAllSets) {
        if (set_dims(kind) == 1) {
            for (auto v : axis) visit(InterventionSet(kind, {v}));
        } else {
            for (auto p : axis)
                for (auto i : axis) visit(InterventionSet::PI(p, i));
        }
    }
    return out;
}

std::vector<OracleResult> oracle_sequence(const ScenarioConfig& config, std::shared_ptr<const NetworkGraph> graph,
                                          const std::vector<std::size_t>& slices, std::size_t resolution,
                                          std::size_t n_rollouts, const std::function<std::uint64_t(std::size_t)>& seed_for) {
    std::vector<OracleResult> out;
    for (auto t : slices)
        out.push_back(grid_search_optimum(config, graph, t, oracle_path(out), resolution, n_rollouts, seed_for(t)));
    return out;
}

InterventionHistory oracle_path(const std::vector<OracleResult>& results) {
    InterventionHistory h;
    for (const auto& r : results) h.append({r.t, r.best_set, r.y_star, r.best_outcome});
    return h;
}

namespace {

void row(std::ostream& out, std::size_t t, const InterventionSet& set, double value, int best) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out << fmt::format("{},{},{},{},{},{}\n", t, to_string(set.kind()), csv::real(set.value_of(Var::P).value_or(nan)),
                       csv::real(set.value_of(Var::I).value_or(nan)), csv::real(value), best);
}

}  // namespace

void write_oracle_csv(std::ostream& out, const std::vector<OracleResult>& results) {
    out << "t,set,p_value,i_value,mean_objective,best\n";
    for (const auto& r : results) {
        for (const auto& g : r.full_grid) row(out, r.t, g.set, g.outcome.total, 0);
        row(out, r.t, r.best_set, r.y_star, 1);
    }
}

}  // namespace ccd
