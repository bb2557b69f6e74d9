#ifndef PARETOCHAN_H
#define PARETOCHAN_H

/* C interface to the paretochan EEG channel-selection pipeline.
 *
 * All functions returning pchan_status report failures through the return
 * value; pchan_last_error() gives a message for the most recent failure on
 * the calling thread. Strings returned through char** out-parameters are
 * heap-allocated and must be released with pchan_string_free().
 */

#include <stdint.h>

#if defined(_WIN32)
#define PCHAN_API __declspec(dllexport)
#else
#define PCHAN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pchan_status {
  PCHAN_OK = 0,
  PCHAN_ERR_INTERNAL = 1, /* unexpected failure, bad arguments included */
  PCHAN_ERR_CONFIG = 2,   /* invalid configuration or unusable request */
  PCHAN_ERR_DATA = 3,     /* unreadable or inconsistent input data */
  PCHAN_ERR_NUMERIC = 4   /* numerical failure (singular matrices, divergence) */
} pchan_status;

typedef struct pchan_config pchan_config;
typedef struct pchan_result pchan_result;

PCHAN_API const char* pchan_version(void);

/* Message for the last failed call on this thread; empty string if none. */
PCHAN_API const char* pchan_last_error(void);

PCHAN_API void pchan_string_free(char* s);

/* --- configuration ----------------------------------------------------- */

PCHAN_API pchan_status pchan_config_from_file(const char* path, pchan_config** out);
PCHAN_API pchan_status pchan_config_from_json(const char* json_text, pchan_config** out);
PCHAN_API void pchan_config_destroy(pchan_config* cfg);

PCHAN_API pchan_status pchan_config_set_seed(pchan_config* cfg, uint64_t seed);
/* Empty string disables file export. */
PCHAN_API pchan_status pchan_config_set_out_dir(pchan_config* cfg, const char* dir);
PCHAN_API pchan_status pchan_config_to_json(const pchan_config* cfg, char** out_json);

/* --- full channel-selection run ----------------------------------------- */

/* Runs search + export (unless out_dir is empty) and returns the result. */
PCHAN_API pchan_status pchan_run(const pchan_config* cfg, pchan_result** out);
PCHAN_API void pchan_result_destroy(pchan_result* result);

PCHAN_API int pchan_result_front_size(const pchan_result* result);

/* Entry `index` of the layered Pareto front. Any out-parameter may be NULL.
 * mask_bits is a '0'/'1' string over the layout; channels is a
 * space-separated electrode name list. */
PCHAN_API pchan_status pchan_result_front_entry(const pchan_result* result, int index,
                                                int* layer, double* error_rate,
                                                double* channel_count, char** mask_bits,
                                                char** channels);

PCHAN_API pchan_status pchan_result_params(const pchan_result* result, double* alpha,
                                           double* beta, double* gamma, int* d_pairs,
                                           int* mrmr_k);

PCHAN_API long long pchan_result_evaluations(const pchan_result* result);
PCHAN_API long long pchan_result_cache_hits(const pchan_result* result);
PCHAN_API double pchan_result_wall_seconds(const pchan_result* result);

/* --- single-mask evaluation --------------------------------------------- */

/* Scores one channel mask with the configured pipeline. When model_text is
 * non-NULL it receives the fitted spatial-filter model as text. */
PCHAN_API pchan_status pchan_eval_mask(const pchan_config* cfg, const char* mask_bits,
                                       double* error_rate, double* channel_count,
                                       char** model_text);

/* --- utilities ----------------------------------------------------------- */

/* Writes a synthetic two-class dataset (manifest.json + trial CSVs +
 * layout.csv) under dir. `informative` lists discriminative channel
 * indices. */
PCHAN_API pchan_status pchan_synth_dataset(const char* dir, int n_channels,
                                           int n_trials_per_class, int n_samples, double fs,
                                           const int* informative, int n_informative,
                                           double snr, uint64_t seed);

/* Bandpass design dump: second-order sections and response summary. */
PCHAN_API pchan_status pchan_filter_text(int order, double low_hz, double high_hz, double fs,
                                         char** out_text);

/* Per-layer summary of an exported result directory. */
PCHAN_API pchan_status pchan_layers_text(const char* result_dir, char** out_text);

#ifdef __cplusplus
}
#endif

#endif /* PARETOCHAN_H */
