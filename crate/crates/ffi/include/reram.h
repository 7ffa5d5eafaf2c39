#ifndef RERAM_H
#define RERAM_H

/* Generated by cbindgen; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Length of a feature vector.
 */
#define RERAM_FEATURE_LEN 38

/**
 * Taxels per frame (9×9).
 */
#define RERAM_FRAME_LEN 81

typedef enum ReramStatus {
  RERAM_STATUS_OK = 0,
  RERAM_STATUS_NULL_POINTER = 1,
  RERAM_STATUS_INVALID_ARGUMENT = 2,
  RERAM_STATUS_DIMENSION_MISMATCH = 3,
  RERAM_STATUS_INVALID_PARAMS = 4,
  RERAM_STATUS_DEGENERATE = 5,
  RERAM_STATUS_INSUFFICIENT_DATA = 6,
  RERAM_STATUS_EMPTY = 7,
  RERAM_STATUS_INVALID_LABEL = 8,
  RERAM_STATUS_PARSE = 9,
  RERAM_STATUS_IO = 10,
  RERAM_STATUS_PANIC = 11,
} ReramStatus;

/**
 * Trained network with its input standardizer.
 */
typedef struct ReramModel ReramModel;

/**
 * Crossbar tile with its own random stream for updates and programming.
 */
typedef struct ReramTile ReramTile;

typedef struct ReramPulseScheme {
  size_t batches;
  size_t up_per_batch;
  size_t down_per_batch;
  size_t alternating_per_batch;
} ReramPulseScheme;

/**
 * Gaussian over `(n_states, asymmetry)` with the given moments.
 */
typedef struct ReramDistribution {
  double mean_n_states;
  double mean_asymmetry;
  double var_n_states;
  double cov_n_states_asymmetry;
  double var_asymmetry;
  double sigma_c2c;
} ReramDistribution;

typedef struct ReramDeviceParams {
  double gamma_up;
  double gamma_down;
  double b_min;
  double b_max;
  double sigma_c2c;
} ReramDeviceParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the buffer size needed for the full message.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t reram_last_error(char *buf, size_t len);

/**
 * Pulse scheme used for device characterization.
 */
struct ReramPulseScheme reram_default_scheme(void);

/**
 * Default device-to-device distribution.
 */
struct ReramDistribution reram_default_distribution(void);

/**
 * Device on the nominal bounds with the given state count and asymmetry.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum ReramStatus reram_device_from_states(double n_states,
                                          double asymmetry,
                                          double sigma_c2c,
                                          struct ReramDeviceParams *out);

/**
 * # Safety
 * `params` and `out` must be null or valid.
 */
enum ReramStatus reram_n_states(const struct ReramDeviceParams *params, double *out);

/**
 * # Safety
 * `params` and `out` must be null or valid.
 */
enum ReramStatus reram_asymmetry(const struct ReramDeviceParams *params, double *out);

/**
 * Number of samples in a trace for `scheme`: one per pulse plus the
 * initial state.
 */
size_t reram_trace_len(struct ReramPulseScheme scheme);

/**
 * Simulate a pulse-train response into `out`, which must hold exactly
 * `reram_trace_len(scheme)` values.
 *
 * # Safety
 * `params` must be null or valid; `out` must be null or point to `out_len`
 * writable doubles.
 */
enum ReramStatus reram_simulate_trace(const struct ReramDeviceParams *params,
                                      struct ReramPulseScheme scheme,
                                      double w0,
                                      uint64_t seed,
                                      double *out,
                                      size_t out_len);

/**
 * Fit Soft-Bounds parameters to a trace. `mad` receives the mean absolute
 * deviation of the fit and may be null.
 *
 * # Safety
 * `trace` must point to `len` doubles; `out` must be valid; `mad` may be null.
 */
enum ReramStatus reram_fit(const double *trace,
                           size_t len,
                           struct ReramPulseScheme scheme,
                           uint64_t seed,
                           struct ReramDeviceParams *out,
                           double *mad);

/**
 * Tile of devices sampled from `dist`, all starting at `w = 0`.
 *
 * # Safety
 * `dist` must be null or valid; `out` must be valid for writes.
 */
enum ReramStatus reram_tile_new(size_t rows,
                                size_t cols,
                                const struct ReramDistribution *dist,
                                uint64_t seed,
                                struct ReramTile **out);

/**
 * Tile of identical devices, all starting at `w = 0`.
 *
 * # Safety
 * `params` must be null or valid; `out` must be valid for writes.
 */
enum ReramStatus reram_tile_new_uniform(size_t rows,
                                        size_t cols,
                                        const struct ReramDeviceParams *params,
                                        uint64_t seed,
                                        struct ReramTile **out);

/**
 * # Safety
 * `tile` must be null or a handle from `reram_tile_new*` not yet freed.
 */
void reram_tile_free(struct ReramTile *tile);

/**
 * # Safety
 * `tile` must be a live handle; `rows`/`cols` may be null.
 */
enum ReramStatus reram_tile_shape(const struct ReramTile *tile, size_t *rows, size_t *cols);

/**
 * `y = Wᵀx` with `x` of length `rows` and `y` of length `cols`.
 *
 * # Safety
 * `tile` must be a live handle; buffers must hold the stated lengths.
 */
enum ReramStatus reram_tile_forward(const struct ReramTile *tile,
                                    const double *x,
                                    size_t x_len,
                                    double *y,
                                    size_t y_len);

/**
 * `z = W·d` with `d` of length `cols` and `z` of length `rows`.
 *
 * # Safety
 * `tile` must be a live handle; buffers must hold the stated lengths.
 */
enum ReramStatus reram_tile_backward(const struct ReramTile *tile,
                                     const double *d,
                                     size_t d_len,
                                     double *z,
                                     size_t z_len);

/**
 * Stochastic pulse-coincidence update along `−lr·x·dᵀ`. `pulses` receives
 * the number of applied pulses and may be null.
 *
 * # Safety
 * `tile` must be a live handle; buffers must hold the stated lengths.
 */
enum ReramStatus reram_tile_update(struct ReramTile *tile,
                                   const double *x,
                                   size_t x_len,
                                   const double *d,
                                   size_t d_len,
                                   double lr,
                                   size_t *pulses);

/**
 * Copy the current weights (device states), row-major.
 *
 * # Safety
 * `tile` must be a live handle; `out` must hold `rows·cols` doubles.
 */
enum ReramStatus reram_tile_read(const struct ReramTile *tile, double *out, size_t len);

/**
 * Program-and-verify every device toward `targets` (row-major). The
 * fraction of converged devices is written to `converged` (may be null).
 *
 * # Safety
 * `tile` must be a live handle; `targets` must hold `rows·cols` doubles.
 */
enum ReramStatus reram_tile_program(struct ReramTile *tile,
                                    const double *targets,
                                    size_t len,
                                    double epsilon,
                                    size_t max_iter,
                                    double *converged);

/**
 * Extract the 38 features of a series of `n_frames` 9×9 frames (each
 * `RERAM_FRAME_LEN` doubles, row-major). With `window > 0` the series is
 * smoothed and normalized first.
 *
 * # Safety
 * `frames` must hold `n_frames·RERAM_FRAME_LEN` doubles; `out` must hold
 * `RERAM_FEATURE_LEN` doubles.
 */
enum ReramStatus reram_extract_features(const double *frames,
                                        size_t n_frames,
                                        size_t window,
                                        double *out,
                                        size_t out_len);

/**
 * Load a model JSON written by `reram-sim train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum ReramStatus reram_model_load(const char *path, struct ReramModel **out);

/**
 * # Safety
 * `model` must be null or a handle from `reram_model_load` not yet freed.
 */
void reram_model_free(struct ReramModel *model);

/**
 * # Safety
 * `model` must be a live handle; `inputs`/`classes` may be null.
 */
enum ReramStatus reram_model_shape(const struct ReramModel *model, size_t *inputs, size_t *classes);

/**
 * Classify one raw feature vector. `class_out` receives the 1-based label;
 * `logits` (may be null) receives the output scores.
 *
 * # Safety
 * `model` must be a live handle; `features` must hold the model's input
 * count; `logits` must be null or hold the class count.
 */
enum ReramStatus reram_model_predict(const struct ReramModel *model,
                                     const double *features,
                                     size_t len,
                                     uint32_t *class_out,
                                     double *logits,
                                     size_t logits_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RERAM_H */
