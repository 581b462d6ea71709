/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef HYPOTEST_H
#define HYPOTEST_H

#include <stdint.h>
#include <stddef.h>

typedef enum HtStatus {
  HT_STATUS_OK = 0,
  HT_STATUS_NULL_POINTER = 1,
  HT_STATUS_INVALID_UTF8 = 2,
  HT_STATUS_FILE_NOT_FOUND = 3,
  HT_STATUS_IO = 4,
  HT_STATUS_PARSE = 5,
  HT_STATUS_INVALID_DATA = 6,
  HT_STATUS_INVALID_CONFIG = 7,
  HT_STATUS_NUMERICAL = 8,
  HT_STATUS_EXTERNAL = 9,
  HT_STATUS_OUT_OF_RANGE = 10,
  HT_STATUS_PANIC = 11,
} HtStatus;

typedef struct HtModel HtModel;

typedef struct HtReport HtReport;

typedef struct HtTable HtTable;

/*
 Fills `out[0..n_rows]` with predictions for `n_rows` row-major rows of
 `n_features` values. Returns 0 on success. May be called from several
 threads at once.
 */
typedef int32_t (*HtPredictFn)(void *user_data,
                               const double *rows,
                               size_t n_rows,
                               size_t n_features,
                               double *out);

typedef struct HtOptions {
  size_t sample;
  size_t permutations;
  size_t grid;
  size_t lag;
  double alpha;
  size_t boot;
  uint64_t seed;
} HtOptions;

/*
 Effect band: -1 withheld, 0 trivial, 1 small, 2 medium, 3 large.
 Direction: 0 negative, 1 positive, 2 not monotone, 3 undetermined,
 -1 withheld. Slope fields are NaN when no slope was fitted.
 */
typedef struct HtVariableSummary {
  double f2_raw;
  double f2_adjusted;
  int32_t band;
  int32_t direction;
  int64_t mk_s;
  double mk_p;
  double slope;
  double slope_p;
  double slope_per_unit;
} HtVariableSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *ht_version(void);

/*
 Message of the last failure on this thread, or NULL after a success.
 Valid until the next `ht_*` call on the same thread.
 */
const char *ht_last_error_message(void);

/*
 Stable snake_case code of the last failure on this thread, or NULL.
 */
const char *ht_last_error_code(void);

/*
 # Safety
 `s` must come from a `ht_*` function that returns an owned string, and
 must not be used afterwards. NULL is ignored.
 */
void ht_string_free(char *s);

/*
 # Safety
 `path` and `target` must be NUL-terminated strings; `out` must be writable.
 */
enum HtStatus ht_table_load_csv(const char *path, const char *target, struct HtTable **out);

/*
 Builds a table from `n_columns` column-major arrays of `n_rows` values.
 `target` may be NULL for a table without a target.

 # Safety
 `column_names` must hold `n_columns` strings and `values` `n_columns * n_rows`
 doubles; `out` must be writable.
 */
enum HtStatus ht_table_from_columns(const char *const *column_names,
                                    size_t n_columns,
                                    const double *values,
                                    size_t n_rows,
                                    const char *target,
                                    struct HtTable **out);

/*
 Synthetic Coulomb's-law table with the default ranges.

 # Safety
 `out` must be writable.
 */
enum HtStatus ht_table_generate_coulomb(size_t n_rows, uint64_t seed, struct HtTable **out);

/*
 Z-scored copy of every column, the target included.

 # Safety
 `table` must be a live table handle; `out` must be writable.
 */
enum HtStatus ht_table_standardize(const struct HtTable *table, struct HtTable **out);

/*
 # Safety
 `table` must be a live table handle or NULL (gives 0).
 */
size_t ht_table_n_rows(const struct HtTable *table);

/*
 # Safety
 `table` must be a live table handle or NULL (gives 0).
 */
size_t ht_table_n_columns(const struct HtTable *table);

/*
 # Safety
 `table` must come from a `ht_table_*` constructor and not be used
 afterwards. NULL is ignored.
 */
void ht_table_free(struct HtTable *table);

/*
 Trains the default network on a standardized table. `epochs` of 0 keeps
 the default.

 # Safety
 `table` must be a live table handle; `out` must be writable.
 */
enum HtStatus ht_model_train(const struct HtTable *table,
                             size_t epochs,
                             uint64_t seed,
                             struct HtModel **out);

/*
 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum HtStatus ht_model_load(const char *path, struct HtModel **out);

/*
 Saves a trained model; callback models cannot be saved.

 # Safety
 `model` must be a live model handle; `path` a NUL-terminated string.
 */
enum HtStatus ht_model_save(const struct HtModel *model, const char *path);

/*
 Wraps a foreign model. Features are passed to `callback` in the order of
 `feature_names`, in standardized units.

 # Safety
 `feature_names` must hold `n_features` strings. `callback` and
 `user_data` must stay valid, and be safe to use from several threads,
 for as long as the model handle lives.
 */
enum HtStatus ht_model_from_callback(const char *const *feature_names,
                                     size_t n_features,
                                     HtPredictFn callback,
                                     void *user_data,
                                     struct HtModel **out);

/*
 Writes one prediction per table row into `out`, which holds `len` doubles.

 # Safety
 Handles must be live; `out` must have room for `len` doubles.
 */
enum HtStatus ht_model_predict(const struct HtModel *model,
                               const struct HtTable *table,
                               double *out,
                               size_t len);

/*
 # Safety
 `model` must come from a `ht_model_*` constructor and not be used
 afterwards. NULL is ignored.
 */
void ht_model_free(struct HtModel *model);

/*
 Default explanation settings.
 */
struct HtOptions ht_options_default(void);

/*
 Explains `model` on a standardized `table`. `options` may be NULL for
 the defaults.

 # Safety
 Handles must be live; `options` NULL or valid; `out` writable.
 */
enum HtStatus ht_explain(const struct HtModel *model,
                         const struct HtTable *table,
                         const struct HtOptions *options,
                         struct HtReport **out);

/*
 Full run from a JSON analysis configuration, as accepted by the CLI's
 `--config`. Outputs are written when the configuration names a directory.

 # Safety
 `config_json` must be a NUL-terminated string; `out` writable.
 */
enum HtStatus ht_analyze_json(const char *config_json, struct HtReport **out);

/*
 The report as JSON; free the string with [`ht_string_free`].

 # Safety
 `report` must be a live handle; `out` writable.
 */
enum HtStatus ht_report_to_json(const struct HtReport *report, char **out);

/*
 Writes report, profile CSV and plots into `dir`.

 # Safety
 `report` must be a live handle; `dir` a NUL-terminated string.
 */
enum HtStatus ht_report_write(const struct HtReport *report, const char *dir);

/*
 Model R² on the explanation sample; NaN for NULL.

 # Safety
 `report` must be a live handle or NULL.
 */
double ht_report_r2(const struct HtReport *report);

/*
 # Safety
 `report` must be a live handle or NULL.
 */
double ht_report_f2_global(const struct HtReport *report);

/*
 # Safety
 `report` must be a live handle or NULL (gives 0).
 */
size_t ht_report_n_variables(const struct HtReport *report);

/*
 # Safety
 `report` must be a live handle; `out` writable.
 */
enum HtStatus ht_report_variable(const struct HtReport *report,
                                 size_t index,
                                 struct HtVariableSummary *out);

/*
 Name of variable `index`; free with [`ht_string_free`].

 # Safety
 `report` must be a live handle; `out` writable.
 */
enum HtStatus ht_report_variable_name(const struct HtReport *report, size_t index, char **out);

/*
 Written conclusion for variable `index`; free with [`ht_string_free`].

 # Safety
 `report` must be a live handle; `out` writable.
 */
enum HtStatus ht_report_variable_narrative(const struct HtReport *report, size_t index, char **out);

/*
 # Safety
 `report` must come from `ht_explain` or `ht_analyze_json` and not be
 used afterwards. NULL is ignored.
 */
void ht_report_free(struct HtReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPOTEST_H */
