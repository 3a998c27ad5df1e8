#ifndef ROOTDENSITY_H
#define ROOTDENSITY_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RdPalette {
  RD_PALETTE_GRAYSCALE = 0,
  RD_PALETTE_INFERNO = 1,
  RD_PALETTE_VIRIDIS = 2,
  RD_PALETTE_ICE = 3,
} RdPalette;

typedef enum RdPrecision {
  RD_PRECISION_FP32 = 0,
  RD_PRECISION_FP64 = 1,
} RdPrecision;

typedef enum RdShift {
  // Always `s = a[m-1][m-1]`.
  RD_SHIFT_RAYLEIGH = 0,
  // Rayleigh shift with an exceptional shift after a non-shrinking step.
  RD_SHIFT_GUARDED = 1,
} RdShift;

// Result code of every call.
typedef enum RdStatus {
  RD_STATUS_OK = 0,
  // Malformed input data.
  RD_STATUS_FORMAT = 2,
  // Vanishing leading coefficient, non-finite coefficient or mixed degrees.
  RD_STATUS_DEGENERATE = 3,
  // Invalid configuration value.
  RD_STATUS_CONFIG = 4,
  RD_STATUS_IO = 5,
  // A required pointer was null.
  RD_STATUS_NULL_POINTER = 6,
  // An output buffer is too small.
  RD_STATUS_BUFFER_TOO_SMALL = 7,
  // Internal failure; the library caught a panic.
  RD_STATUS_PANIC = 8,
} RdStatus;

typedef enum RdToneMode {
  RD_TONE_MODE_LINEAR = 0,
  RD_TONE_MODE_LOG1P = 1,
} RdToneMode;

typedef enum RdVariant {
  RD_VARIANT_WIDE = 0,
  RD_VARIANT_NARROW = 1,
} RdVariant;

// Hit-count raster over a fixed viewport.
typedef struct RdDensityGrid RdDensityGrid;

// Solver for one fixed degree.
typedef struct RdSolver RdSolver;

typedef struct RdSolveConfig {
  // QR iterations per deflation level.
  uint32_t iterations;
  enum RdPrecision precision;
  enum RdShift shift;
  // Threads used by batch solves; 1 solves on the calling thread.
  uint32_t workers;
} RdSolveConfig;

typedef struct RdComplex {
  double re;
  double im;
} RdComplex;

typedef struct RdViewport {
  double x_min;
  double x_max;
  double y_min;
  double y_max;
  uint32_t width;
  uint32_t height;
} RdViewport;

typedef struct RdGridStats {
  uint64_t total_roots;
  uint64_t in_view;
  uint64_t dropped;
  uint32_t max_count;
  uint64_t nonzero_pixels;
} RdGridStats;

typedef struct RdToneMap {
  enum RdToneMode mode;
  double gamma;
  enum RdPalette palette;
} RdToneMap;

typedef struct RdPipelineConfig {
  uint32_t degree;
  uint32_t iterations;
  uint32_t pipeline_depth;
  double clock_hz;
  enum RdVariant variant;
  uint32_t fifo_depth;
  uint32_t fifo_drain_per_cycle;
  uint32_t core_count;
} RdPipelineConfig;

typedef struct RdSimReport {
  uint64_t tasks;
  uint64_t total_cycles;
  uint64_t passes_per_task;
  double cycles_per_input;
  // `(K + 1) * N_p`.
  uint64_t c_batch;
  double throughput_per_s;
  uint64_t fifo_max_occupancy;
  uint64_t stall_cycles;
  uint64_t extractions;
} RdSimReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *rd_version(void);

// Message for the last failed call on this thread, or an empty string. The
// pointer stays valid until the next call on the same thread.
const char *rd_last_error(void);

// Default solver settings: 10 iterations, fp64, guarded shift, one worker.
struct RdSolveConfig rd_solve_config_default(void);

// Creates a solver for polynomials of `degree`.
//
// # Safety
// `config` must be null or point to a valid config; `out` must be valid for
// a pointer write.
enum RdStatus rd_solver_new(uint32_t degree,
                            const struct RdSolveConfig *config,
                            struct RdSolver **out);

// Releases a solver. Null is ignored.
//
// # Safety
// `solver` must be null or a handle from [`rd_solver_new`] not yet freed.
void rd_solver_free(struct RdSolver *solver);

// Degree the solver was created for, or 0 for a null handle.
//
// # Safety
// `solver` must be null or a live handle.
uint32_t rd_solver_degree(const struct RdSolver *solver);

// Solves one monic polynomial. `coeffs` and `roots` both hold `degree`
// entries; root `k` is the value extracted at deflation level `k + 1`.
//
// # Safety
// `coeffs` must be readable and `roots` writable for `degree` elements.
enum RdStatus rd_solver_solve(struct RdSolver *solver,
                              const struct RdComplex *coeffs,
                              struct RdComplex *roots);

// Solves `count` polynomials stored back to back (`count * degree`
// coefficients) into `roots` (`count * degree` entries), using the
// solver's worker count. Results are in input order.
//
// # Safety
// `coeffs` must be readable and `roots` writable for `count * degree`
// elements.
enum RdStatus rd_solver_solve_batch(const struct RdSolver *solver,
                                    const struct RdComplex *coeffs,
                                    size_t count,
                                    struct RdComplex *roots);

// One-shot solve of `a[0] + a[1] z + ... + a[len-1] z^(len-1)` at fp64 with
// the guarded shift. The leading coefficient must not vanish. Writes
// `len - 1` roots; `roots_capacity` is the size of `roots`.
//
// # Safety
// `coeffs` must be readable for `len` elements and `roots` writable for
// `roots_capacity` elements.
enum RdStatus rd_solve(const struct RdComplex *coeffs,
                       size_t len,
                       uint32_t iterations,
                       struct RdComplex *roots,
                       size_t roots_capacity);

// Creates an empty grid covering `viewport`.
//
// # Safety
// `viewport` must point to a valid viewport; `out` must be valid for a
// pointer write.
enum RdStatus rd_grid_new(const struct RdViewport *viewport, struct RdDensityGrid **out);

// Releases a grid. Null is ignored.
//
// # Safety
// `grid` must be null or a handle from [`rd_grid_new`] not yet freed.
void rd_grid_free(struct RdDensityGrid *grid);

// Adds `count` roots. Roots outside the viewport or not finite are counted
// as dropped.
//
// # Safety
// `roots` must be readable for `count` elements.
enum RdStatus rd_grid_accumulate(struct RdDensityGrid *grid,
                                 const struct RdComplex *roots,
                                 size_t count);

// Copies the row-major hit counts (row 0 is the top, `y_max`) into `counts`,
// which must hold `width * height` entries.
//
// # Safety
// `counts` must be writable for `capacity` elements.
enum RdStatus rd_grid_counts(const struct RdDensityGrid *grid, uint32_t *counts, size_t capacity);

// # Safety
// `stats` must be valid for a write.
enum RdStatus rd_grid_stats(const struct RdDensityGrid *grid, struct RdGridStats *stats);

// Adds the counts of `other` into `grid`. Both must have the same size.
//
// # Safety
// Both handles must be live and distinct.
enum RdStatus rd_grid_merge(struct RdDensityGrid *grid, const struct RdDensityGrid *other);

// Tone-maps the grid and writes a PGM (grayscale) or PPM (color) image.
// A null `tone` uses log1p, gamma 1, grayscale.
//
// # Safety
// `tone` must be null or valid; `path` must be a NUL-terminated UTF-8 string.
enum RdStatus rd_grid_write_image(const struct RdDensityGrid *grid,
                                  const struct RdToneMap *tone,
                                  const char *path);

// Pipeline settings of the reference design: degree 6, 10 iterations,
// 16-stage ring, 100 MHz, wide variant, one core.
struct RdPipelineConfig rd_pipeline_config_default(void);

// Pipeline steps one task of degree `n` needs at `t` iterations per level,
// or 0 when `n < 2` or `t == 0`.
uint64_t rd_passes_per_task(uint32_t n, uint32_t t, enum RdVariant variant);

// Runs the cycle-level simulation for `tasks` inputs.
//
// # Safety
// `config` must point to a valid config; `report` must be valid for a write.
enum RdStatus rd_pipeline_simulate(const struct RdPipelineConfig *config,
                                   uint64_t tasks,
                                   struct RdSimReport *report);

// Modeled steady-state throughput `clock_hz * core_count / K` in
// polynomials per second, or a negative value for an invalid config.
//
// # Safety
// `config` must be null or point to a valid config.
double rd_pipeline_throughput(const struct RdPipelineConfig *config);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROOTDENSITY_H */
