#ifndef SMIM_H
#define SMIM_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SmimStatus {
  SMIM_STATUS_OK = 0,
  SMIM_STATUS_NULL_POINTER = 1,
  SMIM_STATUS_INVALID_ARGUMENT = 2,
  SMIM_STATUS_SHAPE = 3,
  SMIM_STATUS_DEGENERATE = 4,
  SMIM_STATUS_STALL = 5,
  SMIM_STATUS_IO = 6,
  SMIM_STATUS_FORMAT = 7,
  SMIM_STATUS_CONFIG = 8,
  SMIM_STATUS_BUDGET = 9,
  SMIM_STATUS_PANIC = 10,
} SmimStatus;

/**
 * Labelled samples.
 */
typedef struct SmimDataset SmimDataset;

/**
 * Orthonormal `d x s` frame.
 */
typedef struct SmimFrame SmimFrame;

/**
 * Kernel feature map.
 */
typedef struct SmimKernel SmimKernel;

/**
 * Link function description.
 */
typedef struct SmimLink SmimLink;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next
 * failing call on the same thread; never null.
 */
const char *smim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *smim_version(void);

/**
 * Parse a link from JSON, e.g. `{"kind":"parity","s":2,"sigma":0.1}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SmimStatus smim_link_from_json(const char *json, struct SmimLink **out);

/**
 * Index rank `s` of the link.
 *
 * # Safety
 * `link` must be a live handle or null (returns 0).
 */
size_t smim_link_rank(const struct SmimLink *link);

/**
 * # Safety
 * `link` must come from this library and not be used afterwards.
 */
void smim_link_free(struct SmimLink *link);

/**
 * Haar-random orthonormal `d x s` frame from `seed`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SmimStatus smim_frame_random(size_t d, size_t s, uint64_t seed, struct SmimFrame **out);

/**
 * Frame from `d * s` column-major entries; the columns must be orthonormal.
 *
 * # Safety
 * `data` must point to `d * s` readable doubles; `out` must be writable.
 */
enum SmimStatus smim_frame_from_matrix(size_t d,
                                       size_t s,
                                       const double *data,
                                       struct SmimFrame **out);

/**
 * # Safety
 * `frame` must be a live handle or null (returns 0).
 */
size_t smim_frame_dim(const struct SmimFrame *frame);

/**
 * # Safety
 * `frame` must be a live handle or null (returns 0).
 */
size_t smim_frame_rank(const struct SmimFrame *frame);

/**
 * Copy the column-major entries into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum SmimStatus smim_frame_copy(const struct SmimFrame *frame, double *buf, size_t len);

/**
 * Operator-norm distance between the projectors onto two frames.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum SmimStatus smim_frame_distance(const struct SmimFrame *a,
                                    const struct SmimFrame *b,
                                    double *out);

/**
 * # Safety
 * `frame` must come from this library and not be used afterwards.
 */
void smim_frame_free(struct SmimFrame *frame);

/**
 * Sample `n` points of the model with planted frame `frame`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum SmimStatus smim_dataset_generate(const struct SmimLink *link,
                                      const struct SmimFrame *frame,
                                      size_t n,
                                      uint64_t seed,
                                      struct SmimDataset **out);

/**
 * Read a text or binary dataset file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SmimStatus smim_dataset_read(const char *path, struct SmimDataset **out);

/**
 * Write a dataset; `binary != 0` selects the binary variant.
 *
 * # Safety
 * `data` must be live; `path` must be a NUL-terminated string.
 */
enum SmimStatus smim_dataset_write(const struct SmimDataset *data,
                                   const char *path,
                                   int32_t binary);

/**
 * # Safety
 * `data` must be a live handle or null (returns 0).
 */
size_t smim_dataset_len(const struct SmimDataset *data);

/**
 * # Safety
 * `data` must be a live handle or null (returns 0).
 */
size_t smim_dataset_dim(const struct SmimDataset *data);

/**
 * # Safety
 * `data` must come from this library and not be used afterwards.
 */
void smim_dataset_free(struct SmimDataset *data);

/**
 * Oracle kernel for degree `l` calibrated on `n_cal` planted samples.
 *
 * # Safety
 * `link` must be live; `out` must be writable.
 */
enum SmimStatus smim_kernel_oracle(const struct SmimLink *link,
                                   size_t d,
                                   size_t l,
                                   size_t n_cal,
                                   uint64_t seed,
                                   struct SmimKernel **out);

/**
 * Kernel from its JSON serialisation.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SmimStatus smim_kernel_from_json(const char *json, struct SmimKernel **out);

/**
 * Number of kernel features.
 *
 * # Safety
 * `kernel` must be a live handle or null (returns 0).
 */
size_t smim_kernel_rank(const struct SmimKernel *kernel);

/**
 * # Safety
 * `kernel` must come from this library and not be used afterwards.
 */
void smim_kernel_free(struct SmimKernel *kernel);

/**
 * One unfolding step at degree `l`. `t = s0 = 0` selects adaptive ranks.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum SmimStatus smim_one_step(const struct SmimDataset *data,
                              const struct SmimKernel *kernel,
                              size_t l,
                              size_t t,
                              size_t s0,
                              uint64_t seed,
                              struct SmimFrame **out);

/**
 * Monte Carlo estimate of the squared degree-`l` coefficient norm of the
 * unconditioned model at dimension `d`, with its standard error.
 *
 * # Safety
 * `link` must be live; `estimate` and `std_error` must be writable.
 */
enum SmimStatus smim_xi_norm(const struct SmimLink *link,
                             size_t d,
                             size_t l,
                             size_t n_mc,
                             uint64_t seed,
                             double *estimate,
                             double *std_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SMIM_H */
