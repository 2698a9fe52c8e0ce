#include "ccd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <limits>
#include <thread>

#include <fmt/format.h>

#include "ccd/csv.hpp"
#include "ccd/errors.hpp"
#include "ccd/plot.hpp"

namespace ccd {

namespace fs = std::filesystem;

void ExperimentSpec::validate() const {
    scenario.validate();
    if (methods.empty()) throw ValidationError("methods", "need at least one method");
    if (slices.empty()) throw ValidationError("slices", "need at least one slice");
    for (std::size_t k = 0; k < slices.size(); ++k) {
        if (slices[k] >= scenario.horizon)
            throw ValidationError("slices", fmt::format("slice {} is outside the horizon {}", slices[k], scenario.horizon));
        if (k > 0 && slices[k] <= slices[k - 1]) throw ValidationError("slices", "must be strictly increasing");
    }
    if (budget < 1) throw ValidationError("budget", "must be at least one trial");
    if (replicates < 1) throw ValidationError("replicates", "must be at least 1");
    if (n_mc < 1) throw ValidationError("n_mc", "must be positive");
    if (n_rollouts < 1) throw ValidationError("n_rollouts", "must be positive");
    if (oracle_resolution < 2) throw ValidationError("resolution", "need at least 2 grid points");
}

std::uint64_t observational_seed(const ExperimentSpec& spec) {
    return derive_seed(spec.master_seed, {stream::kObservational, spec.scenario.episode_seed});
}

std::uint64_t objective_seed(const ExperimentSpec& spec, std::size_t t) {
    return derive_seed(spec.master_seed, {stream::kObjective, spec.scenario.episode_seed, t});
}

std::uint64_t replicate_seed(const ExperimentSpec& spec, std::size_t replicate) {
    return derive_seed(spec.master_seed, {stream::kOptimizer, replicate});
}

std::uint64_t prior_base_seed(const ExperimentSpec& spec) {
    return derive_seed(spec.master_seed, {stream::kPrior});
}

SequentialObjective make_objective(const ExperimentSpec& spec, std::shared_ptr<const NetworkGraph> graph) {
    return [spec, graph](const InterventionSet& set, std::size_t t, const InterventionHistory& history) {
        return evaluate_intervention(spec.scenario, graph, set, t, history, spec.n_rollouts, objective_seed(spec, t));
    };
}

ObservationalDataset generate_dataset(const ExperimentSpec& spec, const NetworkGraph& graph) {
    Rng rng(observational_seed(spec));
    return collect_observational(spec.scenario, graph, rng);
}

ObservationalDataset load_or_generate_dataset(const ExperimentSpec& spec, const NetworkGraph& graph) {
    if (!spec.dataset_path) return generate_dataset(spec, graph);
    std::ifstream in(*spec.dataset_path);
    if (!in) throw std::runtime_error(fmt::format("cannot open dataset '{}'", spec.dataset_path->string()));
    return read_dataset_csv(in);
}

OptimizerOptions optimizer_options(const ExperimentSpec& spec) {
    OptimizerOptions o;
    o.budget = spec.budget;
    o.candidates_per_set = spec.candidates_per_set;
    o.n_mc = spec.n_mc;
    o.prior_seed = prior_base_seed(spec);
    return o;
}

std::vector<ReplicateRun> run_replicates(const ExperimentSpec& spec, std::shared_ptr<const NetworkGraph> graph,
                                         std::shared_ptr<const EstimatedSem> sem,
                                         const InterventionHistory& applied) {
    spec.validate();
    const auto objective = make_objective(spec, graph);
    const auto options = optimizer_options(spec);

    std::vector<ReplicateRun> runs;
    for (auto m : spec.methods)
        for (std::size_t r = 0; r < spec.replicates; ++r) runs.push_back({m, r, {}});

    // Jobs are independent; each writes only its own slot.
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(runs.size());
    auto worker = [&] {
        for (std::size_t k; (k = next++) < runs.size();) {
            try {
                auto& run = runs[k];
                run.result = run_sequence(run.method, objective, sem, spec.slices, applied, options,
                                          replicate_seed(spec, run.replicate));
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    const std::size_t n_threads = std::min(runs.size(), spec.threads == 0 ? hw : spec.threads);
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
    pool.clear();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return runs;
}

std::vector<OracleResult> run_oracle(const ExperimentSpec& spec, std::shared_ptr<const NetworkGraph> graph) {
    spec.validate();
    return oracle_sequence(spec.scenario, std::move(graph), spec.slices, spec.oracle_resolution, spec.n_rollouts,
                           [&spec](std::size_t t) { return objective_seed(spec, t); });
}

void write_trace_csv(std::ostream& out, const std::vector<ReplicateRun>& runs) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out << "method,replicate,t,trial,set,p_value,i_value,observed_y,cumulative_cost,best_so_far\n";
    for (const auto& run : runs)
        for (const auto& trace : run.result.traces)
            for (const auto& trial : trace.trials)
                out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", to_string(run.method), run.replicate, trace.t,
                                   trial.index, to_string(trial.set.kind()),
                                   csv::real(trial.set.value_of(Var::P).value_or(nan)),
                                   csv::real(trial.set.value_of(Var::I).value_or(nan)), csv::real(trial.observed_y),
                                   csv::real(trial.cumulative_cost), csv::real(trial.best_so_far));
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
    const auto table = csv::Table::read(in, {"method", "replicate", "t", "trial", "set", "p_value", "i_value",
                                             "observed_y", "cumulative_cost", "best_so_far"});
    std::vector<TraceRow> rows;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        TraceRow row;
        row.method = parse_method(table.at(r, table.column("method")));
        row.replicate = table.count_at(r, table.column("replicate"));
        row.t = table.count_at(r, table.column("t"));
        row.trial = table.count_at(r, table.column("trial"));
        row.set = parse_set(table.at(r, table.column("set")));
        row.p_value = table.real_at(r, table.column("p_value"));
        row.i_value = table.real_at(r, table.column("i_value"));
        row.observed_y = table.real_at(r, table.column("observed_y"));
        row.cumulative_cost = table.real_at(r, table.column("cumulative_cost"));
        row.best_so_far = table.real_at(r, table.column("best_so_far"));
        rows.push_back(row);
    }
    return rows;
}

std::vector<std::pair<std::size_t, double>> read_oracle_optima(std::istream& in) {
    const auto table = csv::Table::read(in, {"t", "set", "p_value", "i_value", "mean_objective", "best"});
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t r = 0; r < table.rows(); ++r)
        if (table.count_at(r, table.column("best")) == 1)
            out.emplace_back(table.count_at(r, table.column("t")), table.real_at(r, table.column("mean_objective")));
    return out;
}

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    return out;
}

}  // namespace

void cmd_generate(const ExperimentSpec& spec) {
    spec.scenario.validate();
    const auto graph = generate_network(spec.scenario);
    const auto data = generate_dataset(spec, graph);
    {
        auto out = open_out(spec.out_dir / kDatasetFile);
        write_dataset_csv(out, data);
    }
    {
        auto out = open_out(spec.out_dir / kDagFile);
        write_dag_edges(out, build_dag(spec.scenario.horizon));
    }
    if (spec.dump_trajectories) {
        const auto shared = std::make_shared<const NetworkGraph>(graph);
        const auto rules = EngineRules::from(spec.scenario);
        for (std::size_t e = 0; e < data.n_envs; ++e) {
            Rng rng(data.seeds[e]);
            const auto records = run_episode(rules, shared, data.policies[e], data.horizon, rng);
            auto out = open_out(spec.out_dir / "trajectories" / fmt::format("env{}.csv", e));
            write_trajectory_csv(out, records);
        }
    }
}

void cmd_optimize(const ExperimentSpec& spec) {
    spec.validate();
    const auto graph = std::make_shared<const NetworkGraph>(generate_network(spec.scenario));
    std::shared_ptr<const EstimatedSem> sem;
    const bool causal = std::any_of(spec.methods.begin(), spec.methods.end(), [](auto m) { return m != Method::BO; });
    if (causal) sem = std::make_shared<const EstimatedSem>(fit_sem_estimators(load_or_generate_dataset(spec, *graph)));
    const auto runs = run_replicates(spec, graph, sem, oracle_path(run_oracle(spec, graph)));
    auto out = open_out(spec.out_dir / kTraceFile);
    write_trace_csv(out, runs);
}

void cmd_oracle(const ExperimentSpec& spec) {
    spec.validate();
    const auto graph = std::make_shared<const NetworkGraph>(generate_network(spec.scenario));
    const auto results = run_oracle(spec, graph);
    auto out = open_out(spec.out_dir / kOracleFile);
    write_oracle_csv(out, results);
}

void cmd_plot(const fs::path& traces, const std::optional<fs::path>& oracle, const fs::path& svg) {
    std::ifstream tin(traces);
    if (!tin) throw std::runtime_error(fmt::format("cannot open trace file '{}'", traces.string()));
    const auto rows = read_trace_csv(tin);
    if (rows.empty()) throw std::runtime_error(fmt::format("trace file '{}' has no trials", traces.string()));
    std::vector<std::pair<std::size_t, double>> optima;
    if (oracle && fs::exists(*oracle)) {
        std::ifstream oin(*oracle);
        optima = read_oracle_optima(oin);
    }
    auto out = open_out(svg);
    out << render_convergence_svg(rows, optima);
}

}  // namespace ccd
