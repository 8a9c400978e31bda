/* SPDX-License-Identifier: MIT OR Apache-2.0 */

#ifndef DISFERMION_H
#define DISFERMION_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum DsfStatus {
  DSF_STATUS_OK = 0,
  DSF_STATUS_NULL_POINTER = 1,
  DSF_STATUS_INVALID_ARGUMENT = 2,
  DSF_STATUS_NOT_DIMERABLE = 3,
  DSF_STATUS_OUT_OF_RANGE = 4,
  DSF_STATUS_PARSE_ERROR = 5,
  DSF_STATUS_OVERFLOW = 6,
  DSF_STATUS_INTERNAL = 7,
} DsfStatus;

// A finite domain of Z², optionally with a sink.
typedef struct DsfDomain DsfDomain;

// The induced dimer graph of a domain, with a lazily factored Kasteleyn matrix.
typedef struct DsfGraph DsfGraph;

// A family of discrete monomials.
typedef struct DsfMonomialFamily DsfMonomialFamily;

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *dsf_last_error(void);

// Library version, a static NUL-terminated string.
const char *dsf_version(void);

// The rectangle [x0, x1] × [y0, y1].
//
// # Safety
// `out` must be null or valid for a pointer write.
enum DsfStatus dsf_domain_rect(int64_t x0,
                               int64_t y0,
                               int64_t x1,
                               int64_t y1,
                               struct DsfDomain **out);

// A domain from `rect(x0,y0,x1,y1)` or a JSON domain description.
//
// # Safety
// `text` must be null or a NUL-terminated string; `out` null or writable.
enum DsfStatus dsf_domain_parse(const char *text, struct DsfDomain **out);

// Removes the vertex (x, y) as the sink, replacing any previous sink.
//
// # Safety
// `d` must be null or a live domain handle.
enum DsfStatus dsf_domain_set_sink(struct DsfDomain *d, int64_t x, int64_t y);

// Number of vertices, the sink included.
//
// # Safety
// `d` null or live; `out` null or writable.
enum DsfStatus dsf_domain_len(const struct DsfDomain *d, size_t *out);

// # Safety
// `d` must be null or a handle not yet freed.
void dsf_domain_free(struct DsfDomain *d);

// The induced dimer graph; fails with `NOT_DIMERABLE` when colours are
// unbalanced.
//
// # Safety
// `d` null or live; `out` null or writable.
enum DsfStatus dsf_graph_induce(const struct DsfDomain *d, struct DsfGraph **out);

// Numbers of whites, blacks and edges.
//
// # Safety
// `g` null or live; outputs null or writable.
enum DsfStatus dsf_graph_size(const struct DsfGraph *g,
                              size_t *whites,
                              size_t *blacks,
                              size_t *edges);

// Number of dimer covers, |det K|; `OVERFLOW` beyond 2⁶⁴ − 1.
//
// # Safety
// `g` null or live; `out` null or writable.
enum DsfStatus dsf_graph_count_covers(const struct DsfGraph *g, uint64_t *out);

// E[η(w)ξ(b)] = conj K⁻¹(w, b) in double precision.
//
// # Safety
// `g` null or live; outputs null or writable.
enum DsfStatus dsf_graph_two_point(struct DsfGraph *g,
                                   int64_t wx,
                                   int64_t wy,
                                   int64_t bx,
                                   int64_t by,
                                   double *re,
                                   double *im);

// Probability that the edge between two adjacent vertices is covered.
//
// # Safety
// `g` null or live; `out` null or writable.
enum DsfStatus dsf_graph_edge_probability(struct DsfGraph *g,
                                          int64_t ax,
                                          int64_t ay,
                                          int64_t bx,
                                          int64_t by,
                                          double *out);

// # Safety
// `g` must be null or a handle not yet freed.
void dsf_graph_free(struct DsfGraph *g);

// Builds z^[n] for |n| ≤ n_max on the ball of radius r_max.
//
// # Safety
// `out` null or writable.
enum DsfStatus dsf_family_build(int64_t r_max, int32_t n_max, struct DsfMonomialFamily **out);

// Loads a family saved by the CLI or the library.
//
// # Safety
// `path` null or NUL-terminated; `out` null or writable.
enum DsfStatus dsf_family_load(const char *path, struct DsfMonomialFamily **out);

// z^[n](x, y) in double precision.
//
// # Safety
// `f` null or live; outputs null or writable.
enum DsfStatus dsf_family_value(const struct DsfMonomialFamily *f,
                                int32_t n,
                                int64_t x,
                                int64_t y,
                                double *re,
                                double *im);

// Null radius r₀(n) for n ≥ 0 (−1 when z^[n](0) ≠ 0).
//
// # Safety
// `f` null or live; `out` null or writable.
enum DsfStatus dsf_family_null_radius(const struct DsfMonomialFamily *f, int32_t n, int64_t *out);

// # Safety
// `f` must be null or a handle not yet freed.
void dsf_family_free(struct DsfMonomialFamily *f);

#endif /* DISFERMION_H */
