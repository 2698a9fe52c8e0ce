#include "ccd/ccd.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <fmt/format.h>

#include "ccd/errors.hpp"
#include "ccd/experiment.hpp"
#include "ccd/optim.hpp"
#include "ccd/scenario.hpp"
#include "ccd/scm.hpp"

struct ccd_scenario {
    ccd::ScenarioConfig config;
};

struct ccd_network {
    ccd::NetworkGraph graph;
};

struct ccd_dataset {
    ccd::ObservationalDataset data;
};

namespace {

thread_local std::string last_error;

ccd_status fail(ccd_status status, std::string message) {
    last_error = std::move(message);
    return status;
}

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Maps the C++ exception hierarchy onto status codes.
template <class F>
ccd_status guarded(F&& body) noexcept {
    try {
        body();
        return CCD_OK;
    } catch (const ccd::ParseError& e) {
        return fail(CCD_ERR_PARSE, e.what());
    } catch (const ccd::ValidationError& e) {
        return fail(CCD_ERR_VALIDATION, e.what());
    } catch (const IoError& e) {
        return fail(CCD_ERR_IO, e.what());
    } catch (const std::out_of_range& e) {
        return fail(CCD_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(CCD_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(CCD_ERR_RUNTIME, e.what());
    } catch (...) {
        return fail(CCD_ERR_RUNTIME, "unknown error");
    }
}

#define CCD_REQUIRE(ptr)                                                        \
    do {                                                                        \
        if ((ptr) == nullptr) return fail(CCD_ERR_INVALID_ARGUMENT, #ptr " is null"); \
    } while (0)

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        auto tok = s.substr(start, comma - start);
        tok.erase(0, tok.find_first_not_of(' '));
        tok.erase(tok.find_last_not_of(' ') + 1);
        if (!tok.empty()) out.push_back(tok);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

ccd::ExperimentSpec to_spec(const ccd_experiment_options& o) {
    ccd::ExperimentSpec spec;
    if (o.scenario_path != nullptr) {
        if (!std::filesystem::exists(o.scenario_path))
            throw ccd::ValidationError("scenario", fmt::format("file '{}' does not exist", o.scenario_path));
        spec.scenario = ccd::load_scenario_file(o.scenario_path);
    }
    if (o.out_dir != nullptr) spec.out_dir = o.out_dir;
    if (o.dataset_path != nullptr) spec.dataset_path = o.dataset_path;
    spec.master_seed = o.seed;
    if (o.methods != nullptr) {
        spec.methods.clear();
        for (const auto& m : split_commas(o.methods)) spec.methods.push_back(ccd::parse_method(m));
    }
    if (o.slices != nullptr) spec.slices.assign(o.slices, o.slices + o.n_slices);
    spec.budget = o.budget;
    spec.replicates = o.replicates;
    spec.candidates_per_set = o.candidates_per_set;
    spec.n_mc = o.n_mc;
    spec.n_rollouts = o.n_rollouts;
    spec.oracle_resolution = o.oracle_resolution;
    spec.threads = o.threads;
    spec.dump_trajectories = o.dump_trajectories != 0;
    return spec;
}

}  // namespace

extern "C" {

const char* ccd_version(void) { return "1.0.0"; }

const char* ccd_last_error(void) { return last_error.c_str(); }

const char* ccd_status_name(ccd_status status) {
    switch (status) {
        case CCD_OK: return "ok";
        case CCD_ERR_INVALID_ARGUMENT: return "invalid argument";
        case CCD_ERR_PARSE: return "parse error";
        case CCD_ERR_VALIDATION: return "validation error";
        case CCD_ERR_IO: return "i/o error";
        case CCD_ERR_RUNTIME: return "runtime error";
    }
    return "unknown";
}

const char* ccd_scenario_schema(void) {
    static const std::string schema = ccd::scenario_schema();
    return schema.c_str();
}

ccd_status ccd_scenario_default(ccd_scenario** out) {
    CCD_REQUIRE(out);
    return guarded([&] { *out = new ccd_scenario{}; });
}

ccd_status ccd_scenario_parse(const char* text, ccd_scenario** out) {
    CCD_REQUIRE(text);
    CCD_REQUIRE(out);
    return guarded([&] { *out = new ccd_scenario{ccd::load_scenario(text)}; });
}

ccd_status ccd_scenario_load(const char* path, ccd_scenario** out) {
    CCD_REQUIRE(path);
    CCD_REQUIRE(out);
    return guarded([&] {
        std::ifstream in(path);
        if (!in) throw IoError(fmt::format("cannot open scenario file '{}'", path));
        *out = new ccd_scenario{ccd::load_scenario_file(path)};
    });
}

ccd_status ccd_scenario_to_text(const ccd_scenario* s, char* buf, size_t capacity, size_t* needed) {
    CCD_REQUIRE(s);
    CCD_REQUIRE(needed);
    return guarded([&] {
        const auto text = ccd::to_text(s->config);
        *needed = text.size() + 1;
        if (buf != nullptr && capacity >= *needed) std::memcpy(buf, text.c_str(), *needed);
    });
}

void ccd_scenario_free(ccd_scenario* s) { delete s; }

ccd_status ccd_network_generate(const ccd_scenario* s, ccd_network** out) {
    CCD_REQUIRE(s);
    CCD_REQUIRE(out);
    return guarded([&] { *out = new ccd_network{ccd::generate_network(s->config)}; });
}

size_t ccd_network_size(const ccd_network* net) { return net ? net->graph.size() : 0; }
size_t ccd_network_edge_count(const ccd_network* net) { return net ? net->graph.edge_count() : 0; }
size_t ccd_network_entry(const ccd_network* net) { return net ? net->graph.entry_node() : SIZE_MAX; }
size_t ccd_network_hvt(const ccd_network* net) { return net ? net->graph.hvt() : SIZE_MAX; }

ccd_status ccd_network_vulnerability(const ccd_network* net, size_t node, double* out) {
    CCD_REQUIRE(net);
    CCD_REQUIRE(out);
    return guarded([&] { *out = net->graph.node(node).vulnerability; });
}

ccd_status ccd_network_hops(const ccd_network* net, size_t a, size_t b, size_t* out) {
    CCD_REQUIRE(net);
    CCD_REQUIRE(out);
    return guarded([&] {
        const auto d = ccd::shortest_path_hops(net->graph, a, b);
        *out = d == ccd::kUnreachable ? SIZE_MAX : d;
    });
}

void ccd_network_free(ccd_network* net) { delete net; }

double ccd_attack_score(double skill, double vulnerability) { return ccd::attack_score(skill, vulnerability); }

double ccd_expected_improvement(double mean, double variance, double best) {
    if (!(variance >= 0.0)) return 0.0;
    return ccd::expected_improvement(mean, variance, best);
}

ccd_status ccd_dataset_collect(const ccd_scenario* s, const ccd_network* net, uint64_t seed, ccd_dataset** out) {
    CCD_REQUIRE(s);
    CCD_REQUIRE(net);
    CCD_REQUIRE(out);
    return guarded([&] {
        ccd::Rng rng(seed);
        *out = new ccd_dataset{ccd::collect_observational(s->config, net->graph, rng)};
    });
}

ccd_status ccd_dataset_read_csv(const char* path, ccd_dataset** out) {
    CCD_REQUIRE(path);
    CCD_REQUIRE(out);
    return guarded([&] {
        std::ifstream in(path);
        if (!in) throw IoError(fmt::format("cannot open dataset '{}'", path));
        *out = new ccd_dataset{ccd::read_dataset_csv(in)};
    });
}

ccd_status ccd_dataset_write_csv(const ccd_dataset* d, const char* path) {
    CCD_REQUIRE(d);
    CCD_REQUIRE(path);
    return guarded([&] {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError(fmt::format("cannot write '{}'", path));
        ccd::write_dataset_csv(out, d->data);
    });
}

ccd_status ccd_dataset_shape(const ccd_dataset* d, size_t* n_envs, size_t* horizon) {
    CCD_REQUIRE(d);
    if (n_envs) *n_envs = d->data.n_envs;
    if (horizon) *horizon = d->data.horizon;
    return CCD_OK;
}

ccd_status ccd_dataset_value(const ccd_dataset* d, char variable, size_t env, size_t t, double* out) {
    CCD_REQUIRE(d);
    CCD_REQUIRE(out);
    static constexpr std::string_view names = "PISCHAT";
    const auto k = names.find(variable);
    if (k == std::string_view::npos) return fail(CCD_ERR_INVALID_ARGUMENT, fmt::format("unknown variable '{}'", variable));
    if (env >= d->data.n_envs || t >= d->data.horizon) return fail(CCD_ERR_INVALID_ARGUMENT, "index out of range");
    *out = d->data[ccd::kAllVars[k]](static_cast<Eigen::Index>(env), static_cast<Eigen::Index>(t));
    return CCD_OK;
}

void ccd_dataset_free(ccd_dataset* d) { delete d; }

ccd_status ccd_dag_write(size_t n_slices, const char* path) {
    CCD_REQUIRE(path);
    return guarded([&] {
        const auto dag = ccd::build_dag(n_slices);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError(fmt::format("cannot write '{}'", path));
        ccd::write_dag_edges(out, dag);
    });
}

void ccd_experiment_options_init(ccd_experiment_options* opts) {
    if (opts == nullptr) return;
    const ccd::ExperimentSpec d;
    *opts = ccd_experiment_options{};
    opts->seed = d.master_seed;
    opts->budget = d.budget;
    opts->replicates = d.replicates;
    opts->candidates_per_set = d.candidates_per_set;
    opts->n_mc = d.n_mc;
    opts->n_rollouts = d.n_rollouts;
    opts->oracle_resolution = d.oracle_resolution;
    opts->threads = d.threads;
}

ccd_status ccd_cmd_generate(const ccd_experiment_options* opts) {
    CCD_REQUIRE(opts);
    return guarded([&] { ccd::cmd_generate(to_spec(*opts)); });
}

ccd_status ccd_cmd_optimize(const ccd_experiment_options* opts) {
    CCD_REQUIRE(opts);
    return guarded([&] { ccd::cmd_optimize(to_spec(*opts)); });
}

ccd_status ccd_cmd_oracle(const ccd_experiment_options* opts) {
    CCD_REQUIRE(opts);
    return guarded([&] { ccd::cmd_oracle(to_spec(*opts)); });
}

ccd_status ccd_cmd_plot(const char* trace_csv, const char* oracle_csv, const char* svg_path) {
    CCD_REQUIRE(trace_csv);
    CCD_REQUIRE(svg_path);
    return guarded([&] {
        if (!std::filesystem::exists(trace_csv)) throw IoError(fmt::format("trace file '{}' does not exist", trace_csv));
        std::optional<std::filesystem::path> oracle;
        if (oracle_csv != nullptr) oracle = oracle_csv;
        ccd::cmd_plot(trace_csv, oracle, svg_path);
    });
}

}  // extern "C"
