#ifndef EMCLAB_EMC_H
#define EMCLAB_EMC_H

/*
 * C interface to emclab. Objects are opaque handles released with the
 * matching *_free function. Every call returns an emc_status; on failure
 * emc_last_error() holds a message naming the module and the violated
 * precondition (thread-local, valid until the next call on that thread).
 * Strings returned through char** are heap-allocated; release them with
 * emc_string_free. Reports are JSON documents with states written by label.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EMC_API __declspec(dllexport)
#elif defined(EMC_BUILDING_LIBRARY)
#define EMC_API __attribute__((visibility("default")))
#else
#define EMC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum emc_status {
  EMC_OK = 0,
  EMC_ERR_VALIDATION = 1,
  EMC_ERR_STRUCTURAL = 2,
  EMC_ERR_SIZE = 3,
  EMC_ERR_VERIFICATION = 4,
  EMC_ERR_INTERNAL = 5
} emc_status;

typedef struct emc_model emc_model;
typedef struct emc_matrix emc_matrix;

EMC_API const char* emc_version(void);
EMC_API const char* emc_last_error(void);
EMC_API void emc_string_free(char* s);

/* Models */
EMC_API emc_status emc_model_from_json(const char* json, emc_model** out);
EMC_API emc_status emc_model_from_file(const char* path, emc_model** out);
/* markov2, secondorder, secondorder-stationary, reinforced, regime */
EMC_API emc_status emc_model_builtin(const char* name, emc_model** out);
/* Markov chain with transition `matrix`; uniform initial law when `initial` is NULL. */
EMC_API emc_status emc_model_from_matrix(const emc_matrix* matrix, const double* initial,
                                         emc_model** out);
EMC_API void emc_model_free(emc_model* model);
EMC_API emc_status emc_model_num_states(const emc_model* model, size_t* out);
EMC_API emc_status emc_model_to_json(const emc_model* model, char** out);
EMC_API emc_status emc_model_fingerprint(const emc_model* model, char** out);
/* Writes Pr(next = . | history) into out[0..n). */
EMC_API emc_status emc_model_conditional_next(const emc_model* model, const uint32_t* history,
                                              size_t length, double* out, size_t out_len);
/* Homogeneous first-order matrix read off the exact oracle at `horizon`;
 * EMC_ERR_STRUCTURAL when the exact schedule is time-varying. */
EMC_API emc_status emc_model_first_order(const emc_model* model, size_t horizon, size_t cap,
                                         emc_matrix** out);

/* Matrices */
/* Row-major n*n entries; labels may be NULL (states named 0..n-1). */
EMC_API emc_status emc_matrix_create(size_t n, const double* rows, const char* const* labels,
                                     emc_matrix** out);
EMC_API emc_status emc_matrix_from_json(const char* json, emc_matrix** out);
EMC_API emc_status emc_matrix_from_file(const char* path, emc_matrix** out);
EMC_API void emc_matrix_free(emc_matrix* matrix);
EMC_API emc_status emc_matrix_size(const emc_matrix* matrix, size_t* out);
EMC_API emc_status emc_matrix_entries(const emc_matrix* matrix, double* out, size_t out_len);
EMC_API emc_status emc_matrix_to_json(const emc_matrix* matrix, char** out);
EMC_API emc_status emc_matrix_to_csv(const emc_matrix* matrix, char** out);

/* Chain analysis */
EMC_API emc_status emc_stationary(const emc_matrix* matrix, double* out, size_t out_len);
EMC_API emc_status emc_structure_json(const emc_matrix* matrix, char** out);
/* {"structure", "stationary", "profile"}; the profile is omitted (and
 * profile_csv left NULL) for reducible or periodic matrices unless
 * require_ergodic is set, in which case they are EMC_ERR_STRUCTURAL.
 * `initial` may be NULL (point mass on the first state). */
EMC_API emc_status emc_analyze_json(const emc_matrix* matrix, const double* initial,
                                    size_t t_max, int require_ergodic, char** out,
                                    char** profile_csv);

/* Sampling and estimation */
EMC_API emc_status emc_simulate_jsonl(const emc_model* model, size_t horizon, size_t count,
                                      uint64_t seed, unsigned threads, char** out);
/* Reads an ensemble (JSONL) and writes the estimated matrix, or the
 * per-time schedule when `per_time` is nonzero. */
EMC_API emc_status emc_estimate_json(const char* ensemble_jsonl, int per_time, double smoothing,
                                     char** out);

/* Exact oracle and equivalent chain */
EMC_API emc_status emc_oracle_json(const emc_model* model, size_t horizon, size_t cap,
                                   char** out, char** joint_csv);
EMC_API emc_status emc_lemma1_json(const emc_model* model, size_t horizon, int monte_carlo,
                                   size_t samples, uint64_t seed, size_t cap, unsigned threads,
                                   char** out);
EMC_API emc_status emc_theorem1_json(const emc_model* model, size_t horizon, size_t cap,
                                     char** out);

/* Censoring. `members` are state labels (or indices when unlabeled).
 * Writes {"censored_matrix", "pi_A", "hit_report"}. */
EMC_API emc_status emc_censor_json(const emc_model* model, const char* const* members,
                                   size_t count, size_t hits, size_t samples, uint64_t seed,
                                   size_t cap, unsigned threads, char** out);

/* Verification: scenario name or "all"; matrix_path may be NULL. Sets
 * *all_passed; a failed check is not an error status. */
EMC_API emc_status emc_verify_json(const char* scenario, uint64_t seed, size_t cap,
                                   unsigned threads, const char* matrix_path, int* all_passed,
                                   char** out);

#ifdef __cplusplus
}
#endif

#endif
