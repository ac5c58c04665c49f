#ifndef ALGOSELECT_H
#define ALGOSELECT_H

/* Generated by cbindgen from crates/ffi/src. Regenerate with: cbindgen --config cbindgen.toml --output include/algoselect.h */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  ALGOSELECT_STATUS_OK = 0,
  ALGOSELECT_STATUS_NULL_POINTER = 1,
  ALGOSELECT_STATUS_INVALID_ARGUMENT = 2,
  ALGOSELECT_STATUS_INVALID_UTF8 = 3,
  ALGOSELECT_STATUS_DATA = 4,
  ALGOSELECT_STATUS_IO = 5,
  ALGOSELECT_STATUS_JSON = 6,
  ALGOSELECT_STATUS_PANIC = 7,
} AlgoselectStatus;

/**
 * Branch taken by a two-path comb.
 */
typedef enum {
  ALGOSELECT_ENDPOINT_SYSTEMATIC = 0,
  ALGOSELECT_ENDPOINT_RANDOM = 1,
} AlgoselectEndpoint;

/**
 * Follow-the-perturbed-leader state.
 */
typedef struct AlgoselectFpl AlgoselectFpl;

/**
 * Seeded random source.
 */
typedef struct AlgoselectRng AlgoselectRng;

/**
 * Logistic seeding function.
 */
typedef struct AlgoselectSeeding AlgoselectSeeding;

/**
 * Tree comb network.
 */
typedef struct AlgoselectTree AlgoselectTree;

/**
 * Tree of two-armed UCB1 gates.
 */
typedef struct AlgoselectUcbTree AlgoselectUcbTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *algoselect_version(void);

/**
 * Message of the last failed call on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *algoselect_last_error(void);

void algoselect_string_free(char *s);

AlgoselectStatus algoselect_rng_new(uint64_t seed, AlgoselectRng **out);

void algoselect_rng_free(AlgoselectRng *rng);

/**
 * Stable seed derived from `base` and `count` NUL-terminated labels.
 */
AlgoselectStatus algoselect_derive_seed(uint64_t base,
                                        const char *const *labels,
                                        size_t count,
                                        uint64_t *out);

AlgoselectStatus algoselect_seeding_new(const double *weights,
                                        size_t dim,
                                        double bias,
                                        AlgoselectSeeding **out);

void algoselect_seeding_free(AlgoselectSeeding *s);

/**
 * Comb parameter `t` in (0, 1) for the feature vector `phi`.
 */
AlgoselectStatus algoselect_seeding_seed(const AlgoselectSeeding *s,
                                         const double *phi,
                                         size_t dim,
                                         double *out_t);

/**
 * Picks the random endpoint with probability `t`.
 */
AlgoselectStatus algoselect_comb_select(double t, AlgoselectRng *rng, AlgoselectEndpoint *out);

/**
 * Writes the softmax of `count` scores into `out_probabilities`.
 */
AlgoselectStatus algoselect_n_path(const double *scores, size_t count, double *out_probabilities);

/**
 * `ln(t_sys) - ln(t_ran)`.
 */
AlgoselectStatus algoselect_log_ratio(double t_sys, double t_ran, double *out);

/**
 * Empirical median threshold of `count` log-ratios.
 */
AlgoselectStatus algoselect_threshold_median(const double *values, size_t count, double *out);

/**
 * Builds a tree from its JSON form: `{"leaf": id}` or
 * `{"gate": {"weights": [...], "bias": b}, "left": ..., "right": ...}`.
 */
AlgoselectStatus algoselect_tree_from_json(const char *json, AlgoselectTree **out);

void algoselect_tree_free(AlgoselectTree *tree);

AlgoselectStatus algoselect_tree_leaf_count(const AlgoselectTree *tree, size_t *out);

/**
 * Routes `phi` to a leaf and returns its id. With `deterministic`, gates
 * branch right iff `t > 0.5` and `rng` may be null.
 */
AlgoselectStatus algoselect_tree_route(const AlgoselectTree *tree,
                                       const double *phi,
                                       size_t dim,
                                       bool deterministic,
                                       AlgoselectRng *rng,
                                       char **out_leaf);

/**
 * Like [`algoselect_tree_route`], returning the execution trace as JSON.
 */
AlgoselectStatus algoselect_tree_trace(const AlgoselectTree *tree,
                                       const double *phi,
                                       size_t dim,
                                       AlgoselectRng *rng,
                                       char **out_json);

/**
 * FPL over `k` arms with perturbation scale `scale`.
 */
AlgoselectStatus algoselect_fpl_new(size_t k, double scale, AlgoselectFpl **out);

/**
 * FPL over `k` arms with the scale tuned to `horizon` rounds.
 */
AlgoselectStatus algoselect_fpl_new_tuned(size_t k, uint64_t horizon, AlgoselectFpl **out);

void algoselect_fpl_free(AlgoselectFpl *fpl);

AlgoselectStatus algoselect_fpl_choose(const AlgoselectFpl *fpl,
                                       AlgoselectRng *rng,
                                       size_t *out_arm);

/**
 * Adds one round of `k` losses, each in [0, 1].
 */
AlgoselectStatus algoselect_fpl_update(AlgoselectFpl *fpl, const double *losses, size_t k);

/**
 * Writes the `k` probabilities of choosing each arm next round.
 */
AlgoselectStatus algoselect_fpl_probabilities(const AlgoselectFpl *fpl, double *out, size_t k);

AlgoselectStatus algoselect_ucb_tree_new(uint32_t depth, AlgoselectUcbTree **out);

void algoselect_ucb_tree_free(AlgoselectUcbTree *tree);

/**
 * Leaf the gates would route to now, numbered left to right.
 */
AlgoselectStatus algoselect_ucb_tree_select(const AlgoselectUcbTree *tree, size_t *out_leaf);

/**
 * Credits `loss` in [0, 1] to every gate on the path to `leaf`.
 */
AlgoselectStatus algoselect_ucb_tree_update(AlgoselectUcbTree *tree, size_t leaf, double loss);

/**
 * Runs a simulation from its JSON config and returns the summary as JSON.
 */
AlgoselectStatus algoselect_simulate_json(const char *config_json, char **out_json);

/**
 * Analyzes a runs JSONL file with default settings and returns the report
 * as JSON.
 */
AlgoselectStatus algoselect_analyze_jsonl(const char *path, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ALGOSELECT_H */
