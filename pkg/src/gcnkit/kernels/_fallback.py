"""Pure-numpy implementations of the hot kernels.

Selected at import time by :mod:`gcnkit.kernels` when the compiled extension
is unavailable or explicitly disabled. Numerical semantics mirror the
compiled kernels:

* ``csr_matmul`` and ``walk_end_counts`` are bit-identical to the compiled
  versions (same accumulation sequence, same comparisons).
* ``spmm`` accumulates each output row over entries in ascending column
  order but lets numpy use a fixed pairwise reduction tree, so it agrees
  with the compiled kernel to rounding error, not bitwise. Each backend is
  individually deterministic.
"""

import numpy as np

# Scratch budget for the spmm expansion buffer, in float64 elements.
_SPMM_CHUNK_ELEMS = 1 << 23

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_MIX_M1 = np.uint64(0xFF51AFD7ED558CCD)
_MIX_M2 = np.uint64(0xC4CEB9FE1A85EC53)
_GOLDEN = 0x9E3779B97F4A7C15
_SHIFT33 = np.uint64(33)
_INV_2_53 = 1.0 / 9007199254740992.0


def spmm(indptr, indices, data, dense):
    """CSR (m x n) times dense (n x k) -> dense (m x k)."""
    n_rows = indptr.shape[0] - 1
    k = dense.shape[1]
    out = np.zeros((n_rows, k), dtype=np.float64)
    nnz = indices.shape[0]
    if nnz == 0 or k == 0:
        return out
    # Rows are processed in blocks so the (block_nnz x k) expansion buffer
    # stays bounded.
    max_block_nnz = max(1, _SPMM_CHUNK_ELEMS // max(1, k))
    row = 0
    while row < n_rows:
        end_row = row + 1
        while end_row < n_rows and indptr[end_row + 1] - indptr[row] <= max_block_nnz:
            end_row += 1
        s, e = indptr[row], indptr[end_row]
        if e > s:
            prod = data[s:e, None] * dense[indices[s:e]]
            block_ptr = np.asarray(indptr[row : end_row + 1]) - s
            nonempty = np.flatnonzero(np.diff(block_ptr) > 0)
            out[row + nonempty] = np.add.reduceat(prod, block_ptr[nonempty], axis=0)
        row = end_row
    return out


def csr_matmul(a_indptr, a_indices, a_data, b_indptr, b_indices, b_data, out_cols):
    """CSR (m x n) times CSR (n x p) -> CSR triple with sorted columns.

    Exact zeros produced by cancellation are pruned.
    """
    m = a_indptr.shape[0] - 1
    scratch = np.zeros(out_cols, dtype=np.float64)
    touched = np.zeros(out_cols, dtype=bool)
    out_indptr = np.zeros(m + 1, dtype=np.int64)
    col_chunks = []
    val_chunks = []
    for i in range(m):
        s, e = a_indptr[i], a_indptr[i + 1]
        for jj in range(s, e):
            j = a_indices[jj]
            bs, be = b_indptr[j], b_indptr[j + 1]
            cols = b_indices[bs:be]
            scratch[cols] += a_data[jj] * b_data[bs:be]
            touched[cols] = True
        cols_i = np.flatnonzero(touched)
        if cols_i.size:
            vals_i = scratch[cols_i]
            nz = vals_i != 0.0
            cols_i = cols_i[nz]
            vals_i = vals_i[nz].copy()
            col_chunks.append(cols_i.astype(np.int64))
            val_chunks.append(vals_i)
            out_indptr[i + 1] = out_indptr[i] + cols_i.size
            scratch[touched] = 0.0
            touched[:] = False
        else:
            out_indptr[i + 1] = out_indptr[i]
    if col_chunks:
        out_indices = np.concatenate(col_chunks)
        out_data = np.concatenate(val_chunks)
    else:
        out_indices = np.zeros(0, dtype=np.int64)
        out_data = np.zeros(0, dtype=np.float64)
    return out_indptr, out_indices, out_data


def _mix64(z):
    """fmix64 finalizer on a uint64 array, wrapping modulo 2**64."""
    with np.errstate(over="ignore"):
        z = z ^ (z >> _SHIFT33)
        z = z * _MIX_M1
        z = z ^ (z >> _SHIFT33)
        z = z * _MIX_M2
        z = z ^ (z >> _SHIFT33)
    return z


def mix64_scalar(z):
    z &= 0xFFFFFFFFFFFFFFFF
    z ^= z >> 33
    z = (z * 0xFF51AFD7ED558CCD) & 0xFFFFFFFFFFFFFFFF
    z ^= z >> 33
    z = (z * 0xC4CEB9FE1A85EC53) & 0xFFFFFFFFFFFFFFFF
    z ^= z >> 33
    return z


def walk_end_counts(indptr, indices, aug, k, n_walks, seed):
    """End-node counts of ``n_walks`` k-step random walks from every node.

    ``aug`` holds, per transition-matrix row ``r``, the cumulative
    probabilities shifted by ``r`` (last entry of each row exactly ``r + 1``),
    concatenated in row order; this makes a single global ``searchsorted``
    resolve both the row segment and the sampled neighbour. Randomness is a
    counter-based hash of (seed, start node, walk index, step), so results do
    not depend on iteration order.

    Returns a CSR triple (indptr, indices, counts) over start nodes with
    int64 counts and ascending column indices.
    """
    n = indptr.shape[0] - 1
    base = np.uint64(mix64_scalar(seed))
    # Per-step additive keys, precomputed with wrapping arithmetic.
    step_keys = [np.uint64((_GOLDEN * (t + 1)) & 0xFFFFFFFFFFFFFFFF) for t in range(k)]
    walk_ids = np.arange(n_walks, dtype=np.uint64)

    block = max(1, (1 << 21) // max(1, n_walks))
    out_indptr = np.zeros(n + 1, dtype=np.int64)
    col_chunks = []
    cnt_chunks = []
    for b0 in range(0, n, block):
        b1 = min(n, b0 + block)
        nodes = np.arange(b0, b1, dtype=np.uint64)
        pair = (nodes[:, None] << np.uint64(32)) | walk_ids[None, :]
        h = _mix64(base ^ pair.reshape(-1))
        cur = np.repeat(np.arange(b0, b1, dtype=np.int64), n_walks)
        for t in range(k):
            with np.errstate(over="ignore"):
                u = ((_mix64(h + step_keys[t]) >> np.uint64(11)).astype(np.float64)) * _INV_2_53
            key = cur + u
            pos = np.searchsorted(aug, key, side="right")
            row_end = indptr[cur + 1]
            cur = indices[np.minimum(pos, row_end - 1)]
        ends = cur.reshape(b1 - b0, n_walks)
        for i in range(b1 - b0):
            cols, counts = np.unique(ends[i], return_counts=True)
            col_chunks.append(cols.astype(np.int64))
            cnt_chunks.append(counts.astype(np.int64))
            out_indptr[b0 + i + 1] = out_indptr[b0 + i] + cols.size
    out_indices = np.concatenate(col_chunks) if col_chunks else np.zeros(0, dtype=np.int64)
    out_counts = np.concatenate(cnt_chunks) if cnt_chunks else np.zeros(0, dtype=np.int64)
    return out_indptr, out_indices, out_counts
