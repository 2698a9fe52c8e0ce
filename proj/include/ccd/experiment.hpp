#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <vector>

#include "ccd/optim.hpp"
#include "ccd/oracle.hpp"
#include "ccd/scenario.hpp"
#include "ccd/scm.hpp"

namespace ccd {

/// End-to-end experiment: observational data, optimiser replicates, oracle.
///
/// Seed derivation (all from master_seed):
///   observational data   derive_seed(master, {kObservational, episode_seed})
///   objective at slice t derive_seed(master, {kObjective, episode_seed, t})
///   optimiser replicate  derive_seed(master, {kOptimizer, replicate}), then per
///                        slice derive_seed(that, {kOptimizer, t})
///   causal prior         derive_seed(derive_seed(master, {kPrior}), {kPrior, t})
/// The method is deliberately not part of any derivation, so methods are
/// compared on paired randomness. The network comes from topology_seed.
struct ExperimentSpec {
    ScenarioConfig scenario{};
    std::vector<Method> methods{Method::BO, Method::CBO, Method::DCBO};
    std::vector<std::size_t> slices{22, 23, 24};
    std::size_t budget = 50;
    std::size_t replicates = 5;
    std::uint64_t master_seed = 2022;
    std::filesystem::path out_dir = "out";
    std::optional<std::filesystem::path> dataset_path{};
    std::size_t candidates_per_set = 200;
    std::size_t n_mc = 50;
    /// Rollouts per objective evaluation, shared by optimisers and oracle.
    std::size_t n_rollouts = 50;
    std::size_t oracle_resolution = 21;
    /// Worker threads for replicates; 0 = hardware concurrency.
    std::size_t threads = 0;
    bool dump_trajectories = false;

    void validate() const;
};

std::uint64_t observational_seed(const ExperimentSpec& spec);
std::uint64_t objective_seed(const ExperimentSpec& spec, std::size_t t);
std::uint64_t replicate_seed(const ExperimentSpec& spec, std::size_t replicate);
std::uint64_t prior_base_seed(const ExperimentSpec& spec);

/// The simulator objective at slice t, as seen by optimisers and oracle alike.
SequentialObjective make_objective(const ExperimentSpec& spec, std::shared_ptr<const NetworkGraph> graph);

ObservationalDataset generate_dataset(const ExperimentSpec& spec, const NetworkGraph& graph);

/// Dataset from spec.dataset_path if set, else generated as cmd_generate would.
ObservationalDataset load_or_generate_dataset(const ExperimentSpec& spec, const NetworkGraph& graph);

struct ReplicateRun {
    Method method;
    std::size_t replicate;
    SequenceResult result;
};

OptimizerOptions optimizer_options(const ExperimentSpec& spec);

/// Every method x replicate, ordered by (method as listed, replicate).
/// `applied` is what the system ran at earlier slices; cmd_optimize uses the
/// oracle path so every method, and the oracle, face the same slice-t system.
std::vector<ReplicateRun> run_replicates(const ExperimentSpec& spec, std::shared_ptr<const NetworkGraph> graph,
                                         std::shared_ptr<const EstimatedSem> sem,
                                         const InterventionHistory& applied = {});

std::vector<OracleResult> run_oracle(const ExperimentSpec& spec, std::shared_ptr<const NetworkGraph> graph);

/// One trial of one trace, as stored in the trace CSV.
struct TraceRow {
    Method method = Method::BO;
    std::size_t replicate = 0;
    std::size_t t = 0;
    std::size_t trial = 0;
    SetKind set = SetKind::PI;
    double p_value = 0.0;  // NaN when P is not intervened on
    double i_value = 0.0;  // NaN when I is not intervened on
    double observed_y = 0.0;
    double cumulative_cost = 0.0;
    double best_so_far = 0.0;
};

/// CSV: method,replicate,t,trial,set,p_value,i_value,observed_y,cumulative_cost,best_so_far
void write_trace_csv(std::ostream& out, const std::vector<ReplicateRun>& runs);
std::vector<TraceRow> read_trace_csv(std::istream& in);

/// slice -> y*_t from the best=1 rows of an oracle CSV.
std::vector<std::pair<std::size_t, double>> read_oracle_optima(std::istream& in);

// File-producing commands. Paths are relative to spec.out_dir.
inline constexpr const char* kDatasetFile = "observational.csv";
inline constexpr const char* kDagFile = "dag.txt";
inline constexpr const char* kTraceFile = "traces.csv";
inline constexpr const char* kOracleFile = "oracle.csv";
inline constexpr const char* kPlotFile = "convergence.svg";

void cmd_generate(const ExperimentSpec& spec);
void cmd_optimize(const ExperimentSpec& spec);
void cmd_oracle(const ExperimentSpec& spec);
/// Reads the trace CSV (and the oracle CSV if it exists) and writes the SVG.
void cmd_plot(const std::filesystem::path& traces, const std::optional<std::filesystem::path>& oracle,
              const std::filesystem::path& svg);

}  // namespace ccd
