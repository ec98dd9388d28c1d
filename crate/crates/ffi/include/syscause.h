#ifndef SYSCAUSE_H
#define SYSCAUSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ScStatus {
  SC_STATUS_OK = 0,
  // A required pointer argument was null.
  SC_STATUS_NULL = 1,
  // A string argument was not UTF-8.
  SC_STATUS_UTF8 = 2,
  // The model, stanza or formula text did not parse.
  SC_STATUS_PARSE = 3,
  // The query could not be answered.
  SC_STATUS_QUERY = 4,
  // A state or variant cap was exceeded.
  SC_STATUS_CAP = 5,
  // The engine panicked; the document should be considered unusable.
  SC_STATUS_PANIC = 6,
} ScStatus;

// A parsed model document.
typedef struct ScDocument ScDocument;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parse a model document. On success `*out` owns the document.
//
// # Safety
// `src` must be a nul-terminated string and `out` a valid pointer.
enum ScStatus sc_document_parse(const char *src, struct ScDocument **out);

// # Safety
// `doc` must come from [`sc_document_parse`] and not be used afterwards.
void sc_document_free(struct ScDocument *doc);

// Number of query stanzas in the document, 0 for a null document.
//
// # Safety
// `doc` must be null or a live document.
size_t sc_query_count(const struct ScDocument *doc);

// Run the `index`-th stanza of the document; `*out_json` receives the
// JSON report.
//
// # Safety
// `doc` must be a live document and `out_json` a valid pointer.
enum ScStatus sc_run_query(const struct ScDocument *doc, size_t index, char **out_json);

// Parse one stanza against the document's names, run it, and return the
// JSON report in `*out_json`.
//
// # Safety
// `doc` must be a live document, `stanza` a nul-terminated string and
// `out_json` a valid pointer.
enum ScStatus sc_run_stanza(const struct ScDocument *doc, const char *stanza, char **out_json);

// Evaluate `formula` at the named configuration.
//
// # Safety
// `doc` must be a live document, `config` and `formula` nul-terminated
// strings and `out_holds` a valid pointer.
enum ScStatus sc_check(const struct ScDocument *doc,
                       const char *config,
                       const char *formula,
                       bool *out_holds);

// Message of the last failed call on this thread, empty after a success.
// Valid until the next call on the same thread.
const char *sc_last_error_message(void);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void sc_string_free(char *s);

// Engine version, a static string.
const char *sc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYSCAUSE_H */
