/* C interface to the crash-aware session-type verifier.
 *
 * All functions returning int yield MPST_OK on success or an MPST_ERR_*
 * code; on failure, when `err` is non-NULL, *err receives a heap-allocated
 * diagnostic the caller releases with mpst_string_free. Handles are opaque
 * and freed with their matching *_free function. Strings returned by
 * value-producing calls (mpst_*_print, mpst_lts_dot, ...) are owned by the
 * caller. All calls are thread-compatible: distinct handles may be used
 * from distinct threads, a single handle must not be shared while mutated
 * (every handle here is immutable after construction).
 */
#ifndef MPSTCRASH_H
#define MPSTCRASH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define MPST_OK 0
#define MPST_ERR_PARSE 2   /* input text does not parse */
#define MPST_ERR_INVALID 3 /* parsed but ill-formed (duplicate roles, bad reliable set, ...) */
#define MPST_ERR_LIMIT 4   /* state-space limit exceeded */
#define MPST_ERR_TYPING 5  /* process does not typecheck */
#define MPST_ERR_IO 6      /* file could not be read */
#define MPST_ERR_ARG 7     /* invalid argument (unknown property name, ...) */

typedef struct mpst_doc mpst_doc;       /* parsed protocol document (.mpst) */
typedef struct mpst_lts mpst_lts;       /* built labelled transition system */
typedef struct mpst_system mpst_system; /* parsed process document (.proc) */

void mpst_string_free(char* s);
void mpst_strings_free(char** v, size_t n);

/* ---- protocol documents ---- */

int mpst_doc_parse(const char* text, mpst_doc** out, char** err);
int mpst_doc_read(const char* path, mpst_doc** out, char** err);
void mpst_doc_free(mpst_doc* doc);

const char* mpst_doc_session(const mpst_doc* doc);
size_t mpst_doc_binding_count(const mpst_doc* doc);
const char* mpst_doc_role(const mpst_doc* doc, size_t i);
char* mpst_doc_type(const mpst_doc* doc, size_t i);
size_t mpst_doc_reliable_count(const mpst_doc* doc);
const char* mpst_doc_reliable(const mpst_doc* doc, size_t i);
char* mpst_doc_print(const mpst_doc* doc);

/* ---- state spaces ---- */

/* reliable == NULL uses the document's declared set; an explicit empty
 * list (reliable != NULL, reliable_len == 0) means no role is reliable. */
int mpst_lts_build(const mpst_doc* doc, const char* const* reliable, size_t reliable_len,
                   uint64_t max_states, mpst_lts** out, char** err);
void mpst_lts_free(mpst_lts* lts);

uint64_t mpst_lts_states(const mpst_lts* lts);
uint64_t mpst_lts_edges(const mpst_lts* lts);
uint64_t mpst_lts_reduction_states(const mpst_lts* lts);
uint64_t mpst_lts_reduction_edges(const mpst_lts* lts);
char* mpst_lts_dot(const mpst_lts* lts);
char* mpst_lts_json(const mpst_lts* lts);

/* Check one property of the protocol the LTS was built from. `property` is
 * one of "safe", "df", "live", "term", "nterm". *holds receives the verdict
 * and *conclusive whether the checker could decide it (the liveness oracle
 * may give up on pathological inputs). When witness is non-NULL and the
 * property fails, *witness receives witness_len lines describing a
 * replayable violation trace; release with mpst_strings_free. */
int mpst_check(const mpst_lts* lts, const char* property, int* holds, int* conclusive,
               char*** witness, size_t* witness_len, char** err);

/* ---- process systems ---- */

int mpst_system_parse(const char* text, mpst_system** out, char** err);
int mpst_system_read(const char* path, mpst_system** out, char** err);
void mpst_system_free(mpst_system* sys);
char* mpst_system_print(const mpst_system* sys);

/* Typecheck against the endpoint bindings of `context` (NULL = empty
 * context, for self-contained systems). MPST_ERR_TYPING carries the
 * typing error through *err. */
int mpst_typecheck(const mpst_system* sys, const mpst_doc* context, char** err);

/* Breadth-first crash-aware exploration of the system up to `depth` steps,
 * honoring the context's reliability declaration (and each restriction's
 * own annotation). *visited receives the number of distinct systems seen,
 * *error_free is 1 iff no reachable system contains the error term. */
int mpst_explore(const mpst_system* sys, const mpst_doc* context, int depth,
                 uint64_t* visited, int* error_free, char** err);

#ifdef __cplusplus
}
#endif

#endif /* MPSTCRASH_H */
