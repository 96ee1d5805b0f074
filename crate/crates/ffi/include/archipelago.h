#ifndef ARCHIPELAGO_H
#define ARCHIPELAGO_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The numeric values of the error kinds match the exit codes
 * of the command-line tool.
 */
typedef enum ArchStatus {
  ARCH_STATUS_OK = 0,
  ARCH_STATUS_INPUT = 2,
  ARCH_STATUS_NUMERICAL = 3,
  ARCH_STATUS_PRECONDITION = 4,
  ARCH_STATUS_NULL_POINTER = 5,
  ARCH_STATUS_PANIC = 6,
} ArchStatus;

/**
 * Opaque archipelago description.
 */
typedef struct ArchArchipelago ArchArchipelago;

/**
 * Opaque orthonormal basis.
 */
typedef struct ArchBasis ArchBasis;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or NULL. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *arch_last_error(void);

/**
 * Parse an archipelago from its JSON description.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum ArchStatus arch_archipelago_from_json(const char *json, struct ArchArchipelago **out);

/**
 * # Safety
 * `a` must be NULL or a handle from this library not yet freed.
 */
void arch_archipelago_free(struct ArchArchipelago *a);

/**
 * Orthonormal polynomials `P_0..P_n`. `precision_bits` of 0 selects the
 * precision from `n`; otherwise it is the starting precision, raised as
 * needed.
 *
 * # Safety
 * `a` must be a live archipelago handle and `out` a writable pointer.
 */
enum ArchStatus arch_basis_compute(const struct ArchArchipelago *a,
                                   size_t n,
                                   uint32_t precision_bits,
                                   struct ArchBasis **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum ArchStatus arch_basis_from_json(const char *json, struct ArchBasis **out);

/**
 * Serialize a basis; release the string with [`arch_string_free`].
 *
 * # Safety
 * `b` must be a live basis handle and `out` a writable pointer.
 */
enum ArchStatus arch_basis_to_json(const struct ArchBasis *b, char **out);

/**
 * # Safety
 * `b` must be NULL or a handle from this library not yet freed.
 */
void arch_basis_free(struct ArchBasis *b);

/**
 * Highest degree held by the basis; 0 for a NULL handle.
 *
 * # Safety
 * `b` must be NULL or a live basis handle.
 */
size_t arch_basis_degree(const struct ArchBasis *b);

/**
 * Leading coefficient of `P_k`, rounded to double.
 *
 * # Safety
 * `b` must be a live basis handle and `out` a writable pointer.
 */
enum ArchStatus arch_basis_lambda(const struct ArchBasis *b, size_t k, double *out);

/**
 * Zeros of `P_n` written to `re[0..n]`, `im[0..n]`; `cap` is the length of
 * both arrays and must be at least `n`.
 *
 * # Safety
 * `b` must be a live basis handle; `re` and `im` must each point to `cap`
 * writable doubles.
 */
enum ArchStatus arch_basis_zeros(const struct ArchBasis *b,
                                 size_t n,
                                 double *re,
                                 double *im,
                                 size_t cap);

/**
 * Christoffel function `Λ_n(x + iy)`.
 *
 * # Safety
 * `b` must be a live basis handle and `out` a writable pointer.
 */
enum ArchStatus arch_christoffel(const struct ArchBasis *b,
                                 size_t n,
                                 double x,
                                 double y,
                                 double *out);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library not yet freed.
 */
void arch_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARCHIPELAGO_H */
