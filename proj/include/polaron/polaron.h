/* polaron.h — C interface to the polaron lab core.
 *
 * All entry points return plc_status (except the handle constructors, which
 * return NULL on failure); the most recent error message per thread is
 * available through plc_last_error. Handles are opaque and must be released
 * with their matching _free call.
 */

#ifndef POLARON_POLARON_H
#define POLARON_POLARON_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum plc_status {
    PLC_OK = 0,
    PLC_ERR_INVALID_ARGUMENT = 1,
    PLC_ERR_RUNTIME = 2,
    PLC_ERR_IO = 3,
    PLC_ERR_CHECKS_FAILED = 4
} plc_status;

const char* plc_version(void);
/* thread-local message for the last failing call */
const char* plc_last_error(void);

/* ----------------------------------------------------------- grids/fields */

typedef struct plc_grid plc_grid;
typedef struct plc_field plc_field;

/* dim in {1,2,3}, points a power of two per axis, box_length > 0 */
plc_grid* plc_grid_create(int dim, int points_per_axis, double box_length);
void plc_grid_free(plc_grid* g);

/* family: "gaussian" or "cosine-bump"; role: 'V' or 'W' */
plc_field* plc_potential_build(const plc_grid* g, const char* family, double amplitude,
                               double width, char role);
void plc_field_free(plc_field* f);

plc_status plc_field_norm2(const plc_field* f, double* out);
plc_status plc_field_save(const plc_field* f, const char* path);
plc_field* plc_field_load(const char* path);
/* copies M^d interleaved re/im pairs into out (length 2 M^d) */
plc_status plc_field_values(const plc_field* f, double* out, size_t capacity);

/* Bogoliubov dispersion omega(p) for every momentum mode, length M^d */
plc_status plc_dispersion_omega(const plc_field* v_potential, double* out, size_t capacity);

/* ------------------------------------------------------------ experiments */

/* Runs an experiment described by a plain-text config (see the README for the
 * format) and writes CSV/plot/manifest files under out_dir. A negative seed
 * or thread count keeps the config value. Returns PLC_ERR_CHECKS_FAILED when
 * the experiment ran but one of its built-in checks failed. */
plc_status plc_experiment_run_text(const char* config_text, const char* out_dir, long seed,
                                   int threads);
plc_status plc_experiment_run_file(const char* config_path, const char* out_dir, long seed,
                                   int threads);
/* Built-in config for a subcommand kind; writes up to capacity bytes. */
plc_status plc_experiment_default_config(const char* kind, char* out, size_t capacity);

/* least squares on (log x, log y); n >= 3 strictly positive pairs */
plc_status plc_fit_slope(const double* x, const double* y, size_t n, double* slope,
                         double* stderr_slope);

#ifdef __cplusplus
}
#endif

#endif /* POLARON_POLARON_H */
