#ifndef ARGSTAB_H
#define ARGSTAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ArgstabStatus {
  ARGSTAB_STATUS_OK = 0,
  ARGSTAB_STATUS_NULL_ARGUMENT = 1,
  ARGSTAB_STATUS_INVALID_UTF8 = 2,
  ARGSTAB_STATUS_CONFIG = 3,
  ARGSTAB_STATUS_MALFORMED_TABLE = 4,
  /*
   The crossing sequence could not be turned into a verdict.
   */
  ARGSTAB_STATUS_ANALYSIS = 5,
  ARGSTAB_STATUS_IO = 6,
  /*
   The report has no critical pole to return.
   */
  ARGSTAB_STATUS_NO_CRITICAL_POLE = 7,
  ARGSTAB_STATUS_INVALID_ARGUMENT = 8,
  ARGSTAB_STATUS_PANIC = 9,
} ArgstabStatus;

typedef enum ArgstabForm {
  ARGSTAB_FORM_ADMITTANCE = 0,
  ARGSTAB_FORM_IMPEDANCE = 1,
} ArgstabForm;

typedef enum ArgstabVerdict {
  ARGSTAB_VERDICT_STABLE = 0,
  ARGSTAB_VERDICT_UNSTABLE = 1,
  ARGSTAB_VERDICT_MARGINAL = 2,
} ArgstabVerdict;

typedef struct ArgstabConfig ArgstabConfig;

typedef struct ArgstabReport ArgstabReport;

typedef struct ArgstabTable ArgstabTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL. Valid until the
 next call into this library from the same thread.
 */
const char *argstab_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *argstab_version(void);

/*
 # Safety
 `path` must be a NUL-terminated string and `out_config` writable.
 */
enum ArgstabStatus argstab_config_load(const char *path, struct ArgstabConfig **out_config);

/*
 # Safety
 `config` must come from [`argstab_config_load`] or be NULL.
 */
void argstab_config_free(struct ArgstabConfig *config);

/*
 Reads a CSV or JSON response table, chosen by extension.

 # Safety
 `path` must be a NUL-terminated string and `out_table` writable.
 */
enum ArgstabStatus argstab_table_load(const char *path, struct ArgstabTable **out_table);

/*
 # Safety
 `table` must be a live table handle and `path` a NUL-terminated string.
 */
enum ArgstabStatus argstab_table_save(const struct ArgstabTable *table, const char *path);

/*
 Number of frequency rows, 0 for NULL.

 # Safety
 `table` must be a live table handle or NULL.
 */
size_t argstab_table_len(const struct ArgstabTable *table);

/*
 # Safety
 `table` must come from this library or be NULL.
 */
void argstab_table_free(struct ArgstabTable *table);

/*
 Simulated sweep of the configuration's closed-form device. A negative
 `noise` keeps the configured value.

 # Safety
 `config` must be a live handle and `out_table` writable.
 */
enum ArgstabStatus argstab_sweep(const struct ArgstabConfig *config,
                                 double noise,
                                 uint64_t seed,
                                 struct ArgstabTable **out_table);

/*
 # Safety
 `config` and `table` must be live handles and `out_report` writable.
 */
enum ArgstabStatus argstab_analyze(const struct ArgstabConfig *config,
                                   const struct ArgstabTable *table,
                                   enum ArgstabForm form,
                                   struct ArgstabReport **out_report);

/*
 # Safety
 `report` must be a live handle and both out-pointers writable.
 */
enum ArgstabStatus argstab_report_verdict(const struct ArgstabReport *report,
                                          enum ArgstabVerdict *out_verdict,
                                          int64_t *out_winding);

/*
 Estimated critical pole `sigma + j omega` (1/s, rad/s). Returns
 `NoCriticalPole` when no imaginary-part crossing was found.

 # Safety
 `report` must be a live handle and both out-pointers writable.
 */
enum ArgstabStatus argstab_report_critical_pole(const struct ArgstabReport *report,
                                                double *out_sigma,
                                                double *out_omega);

/*
 Full report as JSON. Free the string with [`argstab_string_free`].

 # Safety
 `report` must be a live handle and `out_json` writable.
 */
enum ArgstabStatus argstab_report_json(const struct ArgstabReport *report, char **out_json);

/*
 # Safety
 `report` must come from this library or be NULL.
 */
void argstab_report_free(struct ArgstabReport *report);

/*
 # Safety
 `s` must come from this library or be NULL.
 */
void argstab_string_free(char *s);

/*
 Damping from `Re D` at an exact imaginary-part zero and the local slope
 `a = dIm/dw`, `b = -dRe/dw`. NaN when the slope vanishes.
 */
double argstab_sigma_from_crossing(double re_d, double a, double b);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARGSTAB_H */
