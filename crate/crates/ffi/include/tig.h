#ifndef TIG_H
#define TIG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TigStatus {
  TIG_STATUS_OK = 0,
  TIG_STATUS_NULL_POINTER = 1,
  TIG_STATUS_INVALID_ARGUMENT = 2,
  TIG_STATUS_INVALID_DESCRIPTOR = 3,
  TIG_STATUS_INVALID_KIND_CODE = 4,
  TIG_STATUS_RESERVED_BITS_SET = 5,
  TIG_STATUS_ZERO_DELAY = 6,
  TIG_STATUS_PATTERN_ERROR = 7,
  TIG_STATUS_CONFIG_ERROR = 8,
  TIG_STATUS_IO_ERROR = 9,
  TIG_STATUS_CYCLE_LIMIT_EXCEEDED = 10,
  TIG_STATUS_OFFSET_OUT_OF_RANGE = 11,
  TIG_STATUS_BUFFER_TOO_SMALL = 12,
  TIG_STATUS_NOT_FOUND = 13,
  TIG_STATUS_PANIC = 14,
} TigStatus;

typedef struct TigInjector TigInjector;

typedef struct TigMetrics TigMetrics;

typedef struct TigSim TigSim;

/**
 * Decoded descriptor. `kind` uses the on-wire kind codes (1 = delay,
 * 2 = read, 3 = write, 4 = read_fix, 5 = write_fix). `delay_cycles` is 0
 * for non-delay kinds.
 */
typedef struct TigDescriptor {
  uint32_t kind;
  uint32_t address;
  uint32_t size_bytes;
  uint32_t delay_cycles;
  uint32_t reps;
  bool last;
  bool irq_on_done;
} TigDescriptor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `cap`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t tig_last_error_message(char *buf, size_t cap);

/**
 * # Safety
 * `d` must point to a valid descriptor; `word0`/`word1` to writable words.
 */
enum TigStatus tig_descriptor_encode(const struct TigDescriptor *d,
                                     uint32_t *word0,
                                     uint32_t *word1);

/**
 * # Safety
 * `out` must point to writable storage for one descriptor.
 */
enum TigStatus tig_descriptor_decode(uint32_t word0, uint32_t word1, struct TigDescriptor *out);

/**
 * Compiles pattern source into descriptor words (word0, word1 pairs).
 * `*len` receives the number of words, even when `cap` is too small.
 *
 * # Safety
 * `source` must be a NUL-terminated string, `words` null or `cap`
 * writable words, `len` writable.
 */
enum TigStatus tig_pattern_compile(const char *source, uint32_t *words, size_t cap, size_t *len);

struct TigInjector *tig_injector_new(uint32_t id);

/**
 * # Safety
 * `h` must be null or a handle from [`tig_injector_new`] not yet freed.
 */
void tig_injector_free(struct TigInjector *h);

/**
 * Configuration-port write.
 *
 * # Safety
 * `h` must be a live injector handle.
 */
enum TigStatus tig_injector_write(struct TigInjector *h, uint32_t offset, uint32_t value);

/**
 * Configuration-port read.
 *
 * # Safety
 * `h` must be a live injector handle and `value` writable.
 */
enum TigStatus tig_injector_read(const struct TigInjector *h, uint32_t offset, uint32_t *value);

/**
 * Builds a simulation from a topology file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum TigStatus tig_sim_load(const char *path, struct TigSim **out);

/**
 * Builds a simulation from topology text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` writable.
 */
enum TigStatus tig_sim_from_str(const char *text, struct TigSim **out);

/**
 * # Safety
 * `h` must be null or a live simulation handle.
 */
void tig_sim_free(struct TigSim *h);

/**
 * Simulates one cycle.
 *
 * # Safety
 * `h` must be a live simulation handle.
 */
enum TigStatus tig_sim_step(struct TigSim *h);

/**
 * Current cycle, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live simulation handle.
 */
uint64_t tig_sim_now(const struct TigSim *h);

/**
 * Configuration-port write to the injector named `name`.
 *
 * # Safety
 * `h` must be a live simulation handle and `name` a NUL-terminated string.
 */
enum TigStatus tig_sim_injector_write(struct TigSim *h,
                                      const char *name,
                                      uint32_t offset,
                                      uint32_t value);

/**
 * Runs to completion or to `max_cycles` (0 means the topology's own cap).
 * On `CycleLimitExceeded` the partial metrics are still returned.
 *
 * # Safety
 * `h` must be a live simulation handle and `out` writable.
 */
enum TigStatus tig_sim_run(struct TigSim *h, uint64_t max_cycles, struct TigMetrics **out);

/**
 * Runs a topology file with and without its injectors.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum TigStatus tig_run_pair(const char *path, struct TigMetrics **out);

/**
 * # Safety
 * `m` must be null or a live metrics handle.
 */
void tig_metrics_free(struct TigMetrics *m);

/**
 * Writes the metrics CSV into `buf`. `*len` receives the byte count
 * (without terminator) even when `cap` is too small; a NUL terminator is
 * written when room allows.
 *
 * # Safety
 * `m` must be a live metrics handle, `buf` null or `cap` writable bytes,
 * `len` writable.
 */
enum TigStatus tig_metrics_csv(const struct TigMetrics *m, char *buf, size_t cap, size_t *len);

/**
 * Completion cycle and slowdown of master `name` in the last scenario of
 * `m`. `*slowdown` is 0 when not available.
 *
 * # Safety
 * `m` must be a live metrics handle, `name` a NUL-terminated string, and
 * the outputs writable.
 */
enum TigStatus tig_metrics_master(const struct TigMetrics *m,
                                  const char *name,
                                  uint64_t *completion_cycle,
                                  double *slowdown);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TIG_H */
