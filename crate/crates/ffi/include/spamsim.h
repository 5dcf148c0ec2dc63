/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef SPAMSIM_H
#define SPAMSIM_H

#include <stdint.h>
#include <stddef.h>
#include <stdbool.h>

typedef enum SpamsimStatus {
  SPAMSIM_STATUS_OK = 0,
  SPAMSIM_STATUS_NULL_POINTER = 1,
  SPAMSIM_STATUS_INVALID_UTF8 = 2,
  SPAMSIM_STATUS_INVALID_ARGUMENT = 3,
  SPAMSIM_STATUS_PARSE = 4,
  SPAMSIM_STATUS_IO = 5,
  SPAMSIM_STATUS_HARNESS = 6,
  SPAMSIM_STATUS_PANIC = 7,
} SpamsimStatus;

typedef enum SpamsimDecision {
  SPAMSIM_DECISION_PASS = 0,
  SPAMSIM_DECISION_BLOCK = 1,
  SPAMSIM_DECISION_TEMP_REJECT = 2,
  SPAMSIM_DECISION_FAILURE_TO_SENDER = 3,
} SpamsimDecision;

typedef enum SpamsimStage {
  SPAMSIM_STAGE_SENDER_AUTH = 0,
  SPAMSIM_STAGE_COUNTER_CHECK = 1,
  SPAMSIM_STAGE_RECEIVER_IDENT = 2,
  SPAMSIM_STAGE_WHITELIST_CHECK = 3,
  SPAMSIM_STAGE_BLACKLIST_CHECK = 4,
  SPAMSIM_STAGE_GREYLIST_CHECK = 5,
  SPAMSIM_STAGE_CONTENT_FILTER = 6,
  SPAMSIM_STAGE_RULE_FILTER = 7,
  SPAMSIM_STAGE_FORWARDED = 8,
} SpamsimStage;

typedef enum SpamsimMount {
  SPAMSIM_MOUNT_SENDER = 0,
  SPAMSIM_MOUNT_RECEIVER = 1,
} SpamsimMount;

/**
 * Opaque engine: configuration, world, lists and the loaded corpus.
 */
typedef struct SpamsimEngine SpamsimEngine;

/**
 * Outcome of one recipient through the pipeline.
 */
typedef struct SpamsimVerdict {
  enum SpamsimDecision decision;
  enum SpamsimStage stage;
  /**
   * Number of stages entered, including the deciding one.
   */
  uint32_t stages_entered;
} SpamsimVerdict;

/**
 * Scenario totals; times are virtual microseconds.
 */
typedef struct SpamsimMetrics {
  uint64_t total_us;
  uint64_t filter_us;
  uint64_t network_us;
  uint64_t filter_invocations;
  uint64_t sessions_opened;
  uint64_t bytes_transferred;
  uint64_t delivered;
  uint64_t blocked;
  uint64_t temp_rejected;
  uint64_t failure_notices;
} SpamsimMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an engine. `config_path` may be null for defaults; otherwise it
 * names a `key = value` file whose corpus, lists and world paths are
 * loaded immediately.
 *
 * # Safety
 * `config_path` must be null or a valid NUL-terminated string; `out` must
 * be a valid pointer.
 */
enum SpamsimStatus spamsim_engine_new(const char *config_path, struct SpamsimEngine **out);

/**
 * Releases an engine. Null is ignored.
 *
 * # Safety
 * `engine` must come from [`spamsim_engine_new`] and not be used again.
 */
void spamsim_engine_free(struct SpamsimEngine *engine);

/**
 * Sets one configuration key, as in a config file. Path keys (`corpus`,
 * `lists`, `world`) are loaded at once.
 *
 * # Safety
 * All pointers must be valid; strings NUL-terminated.
 */
enum SpamsimStatus spamsim_engine_set(struct SpamsimEngine *engine,
                                      const char *key,
                                      const char *value);

/**
 * Replaces the engine's corpus with a generated one.
 *
 * # Safety
 * `engine` must be valid.
 */
enum SpamsimStatus spamsim_engine_generate(struct SpamsimEngine *engine,
                                           size_t count,
                                           double spam_ratio,
                                           size_t distinct_spam_bodies,
                                           uint64_t seed);

/**
 * Number of records in the engine's corpus.
 *
 * # Safety
 * `engine` must be valid and `out` writable.
 */
enum SpamsimStatus spamsim_engine_corpus_len(const struct SpamsimEngine *engine, size_t *out);

/**
 * Runs one corpus record (a single JSON line) through a fresh pipeline
 * for recipient `rcpt_index`. `mount` is a [`SpamsimMount`] value. Token statistics come from the lists
 * directory only; without them the content filter sees an empty model.
 *
 * # Safety
 * All pointers must be valid; `record_json` NUL-terminated.
 */
enum SpamsimStatus spamsim_engine_check(const struct SpamsimEngine *engine,
                                        const char *record_json,
                                        uint32_t mount,
                                        size_t rcpt_index,
                                        struct SpamsimVerdict *out);

/**
 * Runs scenario 1–4 over the engine's corpus and writes its totals.
 *
 * # Safety
 * `engine` must be valid and `out` writable.
 */
enum SpamsimStatus spamsim_engine_run_scenario(const struct SpamsimEngine *engine,
                                               uint8_t scenario,
                                               struct SpamsimMetrics *out);

/**
 * Hex SHA-256 content digest of a subject and body after normalization.
 * The result is released with [`spamsim_string_free`].
 *
 * # Safety
 * Strings must be NUL-terminated; `out` writable.
 */
enum SpamsimStatus spamsim_content_digest(const char *subject, const char *body, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used again.
 */
void spamsim_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null after a
 * success. Valid until the next call on the same thread.
 */
const char *spamsim_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPAMSIM_H */
