# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled CSR and random-walk kernels.

Semantics are documented in gcnkit.kernels._fallback; the two backends make
the same sequence of floating-point comparisons for csr_matmul and
walk_end_counts, and agree to rounding error for spmm.
"""

from libc.stdlib cimport free, malloc, qsort

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef unsigned long long u64

cdef extern from *:
    """
    static int _cmp_i64(const void *a, const void *b) {
        long long x = *(const long long *)a;
        long long y = *(const long long *)b;
        return (x > y) - (x < y);
    }
    """
    int _cmp_i64(const void *a, const void *b) nogil


cdef inline u64 _mix64(u64 z) nogil:
    z ^= z >> 33
    z *= 0xFF51AFD7ED558CCDULL
    z ^= z >> 33
    z *= 0xC4CEB9FE1A85EC53ULL
    z ^= z >> 33
    return z


def mix64_scalar(seed):
    """Expose the hash for cross-backend tests."""
    return int(_mix64(<u64> (seed & 0xFFFFFFFFFFFFFFFF)))


def spmm(const long long[::1] indptr, const long long[::1] indices,
         const double[::1] data, const double[:, ::1] dense):
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef Py_ssize_t k = dense.shape[1]
    out_arr = np.zeros((n_rows, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, jj, c, col
    cdef double v
    with nogil:
        for i in range(n_rows):
            for jj in range(indptr[i], indptr[i + 1]):
                col = <Py_ssize_t> indices[jj]
                v = data[jj]
                for c in range(k):
                    out[i, c] += v * dense[col, c]
    return out_arr


def csr_matmul(const long long[::1] a_indptr, const long long[::1] a_indices,
               const double[::1] a_data,
               const long long[::1] b_indptr, const long long[::1] b_indices,
               const double[::1] b_data, Py_ssize_t out_cols):
    cdef Py_ssize_t m = a_indptr.shape[0] - 1
    cdef Py_ssize_t i, jj, kk, j, n_touched, t, col, out_pos
    cdef double a, val

    cdef double *scratch = <double *> malloc(out_cols * sizeof(double))
    cdef char *seen = <char *> malloc(out_cols * sizeof(char))
    cdef long long *touched = <long long *> malloc(out_cols * sizeof(long long))
    if scratch == NULL or seen == NULL or touched == NULL:
        free(scratch); free(seen); free(touched)
        raise MemoryError
    for t in range(out_cols):
        scratch[t] = 0.0
        seen[t] = 0

    out_indptr_arr = np.zeros(m + 1, dtype=np.int64)
    cdef long long[::1] out_indptr = out_indptr_arr

    cdef Py_ssize_t total = 0
    cdef list col_chunks = []
    cdef list val_chunks = []

    # Single pass, buffering each row before copy-out.
    cdef cnp.ndarray row_cols
    cdef cnp.ndarray row_vals
    cdef long long[::1] rc
    cdef double[::1] rv
    for i in range(m):
        n_touched = 0
        for jj in range(a_indptr[i], a_indptr[i + 1]):
            j = <Py_ssize_t> a_indices[jj]
            a = a_data[jj]
            for kk in range(b_indptr[j], b_indptr[j + 1]):
                col = <Py_ssize_t> b_indices[kk]
                scratch[col] += a * b_data[kk]
                if not seen[col]:
                    seen[col] = 1
                    touched[n_touched] = col
                    n_touched += 1
        if n_touched:
            qsort(touched, n_touched, sizeof(long long), _cmp_i64)
            out_pos = 0
            row_cols = np.empty(n_touched, dtype=np.int64)
            row_vals = np.empty(n_touched, dtype=np.float64)
            rc = row_cols
            rv = row_vals
            for t in range(n_touched):
                col = <Py_ssize_t> touched[t]
                val = scratch[col]
                if val != 0.0:
                    rc[out_pos] = col
                    rv[out_pos] = val
                    out_pos += 1
                scratch[col] = 0.0
                seen[col] = 0
            total += out_pos
            out_indptr[i + 1] = total
            if out_pos:
                col_chunks.append(row_cols[:out_pos])
                val_chunks.append(row_vals[:out_pos])
        else:
            out_indptr[i + 1] = total
    free(scratch); free(seen); free(touched)
    if col_chunks:
        out_indices = np.ascontiguousarray(np.concatenate(col_chunks))
        out_data = np.ascontiguousarray(np.concatenate(val_chunks))
    else:
        out_indices = np.zeros(0, dtype=np.int64)
        out_data = np.zeros(0, dtype=np.float64)
    return out_indptr_arr, out_indices, out_data


cdef inline Py_ssize_t _upper_bound(const double[::1] a, Py_ssize_t lo, Py_ssize_t hi,
                                    double key) nogil:
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] > key:
            hi = mid
        else:
            lo = mid + 1
    return lo


def walk_end_counts(const long long[::1] indptr, const long long[::1] indices,
                    const double[::1] aug, Py_ssize_t k, Py_ssize_t n_walks, seed):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef u64 base = _mix64(<u64> (seed & 0xFFFFFFFFFFFFFFFF))
    cdef u64 golden = 0x9E3779B97F4A7C15ULL
    cdef u64 h, step_key
    cdef Py_ssize_t node, w, t, cur, s, e, pos, n_unique, run, i
    cdef double u, key

    ends_arr = np.empty(n_walks, dtype=np.int64)
    cdef long long[::1] ends = ends_arr

    out_indptr_arr = np.zeros(n + 1, dtype=np.int64)
    cdef long long[::1] out_indptr = out_indptr_arr
    cdef list col_chunks = []
    cdef list cnt_chunks = []
    cdef cnp.ndarray row_cols
    cdef cnp.ndarray row_cnts
    cdef long long[::1] rc
    cdef long long[::1] rn
    cdef Py_ssize_t total = 0

    for node in range(n):
        with nogil:
            for w in range(n_walks):
                h = _mix64(base ^ ((<u64> node << 32) | <u64> w))
                cur = node
                for t in range(k):
                    step_key = golden * (<u64> (t + 1))
                    u = <double> ((_mix64(h + step_key) >> 11)) * (1.0 / 9007199254740992.0)
                    key = (<double> cur) + u
                    s = <Py_ssize_t> indptr[cur]
                    e = <Py_ssize_t> indptr[cur + 1]
                    pos = _upper_bound(aug, s, e, key)
                    if pos >= e:
                        pos = e - 1
                    cur = <Py_ssize_t> indices[pos]
                ends[w] = cur
            qsort(&ends[0], n_walks, sizeof(long long), _cmp_i64)
        # Run-length encode the sorted end nodes.
        n_unique = 1
        for i in range(1, n_walks):
            if ends[i] != ends[i - 1]:
                n_unique += 1
        row_cols = np.empty(n_unique, dtype=np.int64)
        row_cnts = np.empty(n_unique, dtype=np.int64)
        rc = row_cols
        rn = row_cnts
        pos = 0
        run = 1
        for i in range(1, n_walks):
            if ends[i] == ends[i - 1]:
                run += 1
            else:
                rc[pos] = ends[i - 1]
                rn[pos] = run
                pos += 1
                run = 1
        rc[pos] = ends[n_walks - 1]
        rn[pos] = run
        total += n_unique
        out_indptr[node + 1] = total
        col_chunks.append(row_cols)
        cnt_chunks.append(row_cnts)
    if col_chunks:
        out_indices = np.ascontiguousarray(np.concatenate(col_chunks))
        out_counts = np.ascontiguousarray(np.concatenate(cnt_chunks))
    else:
        out_indices = np.zeros(0, dtype=np.int64)
        out_counts = np.zeros(0, dtype=np.int64)
    return out_indptr_arr, out_indices, out_counts
