/* C interface to the causal cyber-defence toolkit.
 *
 * Objects are opaque handles created by *_new / *_load / *_generate style
 * calls and released with the matching *_free. Every fallible call returns a
 * ccd_status; on failure ccd_last_error() describes the problem (the message
 * is per thread and valid until the next failing call on that thread).
 */
#ifndef CCD_CCD_H
#define CCD_CCD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CCD_BUILDING_LIBRARY)
#    define CCD_API __declspec(dllexport)
#  else
#    define CCD_API __declspec(dllimport)
#  endif
#else
#  define CCD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ccd_status {
    CCD_OK = 0,
    CCD_ERR_INVALID_ARGUMENT = 1, /* null handle, index out of range */
    CCD_ERR_PARSE = 2,            /* malformed scenario or CSV text */
    CCD_ERR_VALIDATION = 3,       /* value violates a documented invariant */
    CCD_ERR_IO = 4,               /* file could not be read or written */
    CCD_ERR_RUNTIME = 5           /* numerical or simulation failure */
} ccd_status;

CCD_API const char* ccd_version(void);
CCD_API const char* ccd_last_error(void);
CCD_API const char* ccd_status_name(ccd_status status);

/* ---- scenario ---------------------------------------------------------- */

typedef struct ccd_scenario ccd_scenario;

/* Documented `key = value` schema with defaults. Static storage. */
CCD_API const char* ccd_scenario_schema(void);
CCD_API ccd_status ccd_scenario_default(ccd_scenario** out);
CCD_API ccd_status ccd_scenario_parse(const char* text, ccd_scenario** out);
CCD_API ccd_status ccd_scenario_load(const char* path, ccd_scenario** out);
/* Writes the canonical text into buf (NUL-terminated) when capacity allows;
 * *needed always receives the length including the terminator. */
CCD_API ccd_status ccd_scenario_to_text(const ccd_scenario* s, char* buf, size_t capacity, size_t* needed);
CCD_API void ccd_scenario_free(ccd_scenario* s);

/* ---- network ----------------------------------------------------------- */

typedef struct ccd_network ccd_network;

/* Seeded from the scenario's topology_seed. */
CCD_API ccd_status ccd_network_generate(const ccd_scenario* s, ccd_network** out);
CCD_API size_t ccd_network_size(const ccd_network* net);
CCD_API size_t ccd_network_edge_count(const ccd_network* net);
CCD_API size_t ccd_network_entry(const ccd_network* net);
CCD_API size_t ccd_network_hvt(const ccd_network* net);
CCD_API ccd_status ccd_network_vulnerability(const ccd_network* net, size_t node, double* out);
/* SIZE_MAX when b is unreachable from a. */
CCD_API ccd_status ccd_network_hops(const ccd_network* net, size_t a, size_t b, size_t* out);
CCD_API void ccd_network_free(ccd_network* net);

/* ---- closed forms ------------------------------------------------------ */

CCD_API double ccd_attack_score(double skill, double vulnerability);
CCD_API double ccd_expected_improvement(double mean, double variance, double best);

/* ---- observational data ------------------------------------------------ */

typedef struct ccd_dataset ccd_dataset;

CCD_API ccd_status ccd_dataset_collect(const ccd_scenario* s, const ccd_network* net, uint64_t seed,
                                       ccd_dataset** out);
CCD_API ccd_status ccd_dataset_read_csv(const char* path, ccd_dataset** out);
CCD_API ccd_status ccd_dataset_write_csv(const ccd_dataset* d, const char* path);
CCD_API ccd_status ccd_dataset_shape(const ccd_dataset* d, size_t* n_envs, size_t* horizon);
/* variable is one of 'P', 'I', 'S', 'C', 'H', 'A', 'T'. */
CCD_API ccd_status ccd_dataset_value(const ccd_dataset* d, char variable, size_t env, size_t t, double* out);
CCD_API void ccd_dataset_free(ccd_dataset* d);

/* Edge list of the time-unrolled causal diagram, one `src -> dst` per line. */
CCD_API ccd_status ccd_dag_write(size_t n_slices, const char* path);

/* ---- experiment commands ----------------------------------------------- */

typedef struct ccd_experiment_options {
    const char* scenario_path;  /* NULL = built-in defaults */
    const char* out_dir;        /* NULL = "out" */
    const char* dataset_path;   /* optimize: NULL = generate in-run */
    uint64_t seed;
    const char* methods;        /* comma-separated subset of BO,CBO,DCBO */
    const size_t* slices;       /* NULL = 22,23,24 */
    size_t n_slices;
    size_t budget;
    size_t replicates;
    size_t candidates_per_set;
    size_t n_mc;
    size_t n_rollouts;
    size_t oracle_resolution;
    size_t threads;             /* 0 = hardware concurrency */
    int dump_trajectories;
} ccd_experiment_options;

/* Fills every field with its default. */
CCD_API void ccd_experiment_options_init(ccd_experiment_options* opts);

CCD_API ccd_status ccd_cmd_generate(const ccd_experiment_options* opts);
CCD_API ccd_status ccd_cmd_optimize(const ccd_experiment_options* opts);
CCD_API ccd_status ccd_cmd_oracle(const ccd_experiment_options* opts);
/* oracle_csv may be NULL or a missing file, in which case no y* line is drawn. */
CCD_API ccd_status ccd_cmd_plot(const char* trace_csv, const char* oracle_csv, const char* svg_path);

#ifdef __cplusplus
}
#endif

#endif /* CCD_CCD_H */
