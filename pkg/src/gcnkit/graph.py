"""Graph operators: self-loop adjacency, symmetric normalization, Laplacian,
and exact / walk-estimated k-step transition matrices.

Conventions:

* The adjacency A is symmetric, non-negative, zero-diagonal.
* The one-step transition matrix is the row-normalized self-loop adjacency,
  so walks may stay in place and isolated nodes are well defined.
* Estimated transition matrices come from counting the end nodes of seeded
  k-step random walks; each (start node, walk index) pair draws its own
  counter-based random stream, so results are independent of scheduling.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError
from .tensor import CSRMatrix, csr_matmul


@dataclass(frozen=True)
class GraphOperatorSet:
    """The four operators derived from one undirected graph."""

    adjacency: CSRMatrix          # A
    self_loop_adjacency: CSRMatrix  # A + I
    norm_adjacency: CSRMatrix     # D^{-1/2} (A + I) D^{-1/2} with self-loop degrees
    laplacian: CSRMatrix          # D - A with plain degrees

    @property
    def n_nodes(self):
        return self.adjacency.n_rows


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic k-step transition operator with provenance."""

    order: int
    matrix: CSRMatrix
    provenance: str  # "exact" or "estimated"
    n_walks: int | None = None
    seed: int | None = None
    prune_threshold: float | None = None


def build_operators(adjacency: CSRMatrix) -> GraphOperatorSet:
    """Validate an adjacency matrix and derive all graph operators."""
    n = adjacency.n_rows
    if adjacency.n_cols != n:
        raise ValidationError(f"adjacency must be square, got {adjacency.shape}")
    if adjacency.nnz:
        if adjacency.data.min() < 0:
            raise ValidationError("adjacency has negative weights")
        diag_hit = adjacency.indices == adjacency.row_of_entry()
        if np.any(diag_hit):
            bad = int(adjacency.row_of_entry()[diag_hit][0])
            raise ValidationError(f"adjacency has a non-zero diagonal entry at node {bad}")
    if not adjacency.equals(adjacency.transpose()):
        raise ValidationError("adjacency is not symmetric")

    rows = adjacency.row_of_entry()
    # A + I, built directly: insert the diagonal into each sorted row.
    loop_rows = np.concatenate([rows, np.arange(n, dtype=np.int64)])
    loop_cols = np.concatenate([adjacency.indices, np.arange(n, dtype=np.int64)])
    loop_vals = np.concatenate([adjacency.data, np.ones(n)])
    a_tilde = CSRMatrix.from_coo(n, n, loop_rows, loop_cols, loop_vals)

    loop_degrees = a_tilde.row_sums()
    inv_sqrt = 1.0 / np.sqrt(loop_degrees)
    t_rows = a_tilde.row_of_entry()
    norm_vals = (inv_sqrt[t_rows] * inv_sqrt[a_tilde.indices]) * a_tilde.data
    norm_adjacency = CSRMatrix(n, n, a_tilde.indptr, a_tilde.indices, norm_vals)

    degrees = adjacency.row_sums()
    has_degree = np.flatnonzero(degrees != 0.0)
    lap_rows = np.concatenate([rows, has_degree])
    lap_cols = np.concatenate([adjacency.indices, has_degree])
    lap_vals = np.concatenate([-adjacency.data, degrees[has_degree]])
    laplacian = CSRMatrix.from_coo(n, n, lap_rows, lap_cols, lap_vals)

    return GraphOperatorSet(adjacency, a_tilde, norm_adjacency, laplacian)


def one_step_transition(operators: GraphOperatorSet) -> CSRMatrix:
    """Row-normalized self-loop adjacency (each row sums to 1)."""
    a_tilde = operators.self_loop_adjacency
    return a_tilde.scale_rows(1.0 / a_tilde.row_sums())


def exact_transition_matrix(operators: GraphOperatorSet, k: int) -> TransitionMatrix:
    """k-step transition matrix by repeated sparse multiplication.

    Serves as the ground-truth oracle for the walk estimator.
    """
    if k < 1:
        raise ValidationError(f"transition order must be >= 1, got {k}")
    p1 = one_step_transition(operators)
    pk = p1
    for _ in range(k - 1):
        pk = csr_matmul(pk, p1)
    return TransitionMatrix(order=k, matrix=pk, provenance="exact")


def _cumulative_rows(p1: CSRMatrix) -> np.ndarray:
    """Per-row cumulative probabilities shifted by the row index.

    Row r occupies (r, r+1] with its last entry exactly r+1, which keeps the
    concatenated array globally non-decreasing; a single upper-bound search
    then resolves both the row segment and the sampled neighbour.
    """
    aug = np.empty(p1.nnz, dtype=np.float64)
    indptr = p1.indptr
    for r in range(p1.n_rows):
        s, e = indptr[r], indptr[r + 1]
        if e == s:
            continue
        c = np.cumsum(p1.data[s:e])
        np.minimum(c, 1.0, out=c)
        c[-1] = 1.0
        aug[s:e] = c + float(r)
    return aug


def walk_estimated_transition_matrix(
    operators: GraphOperatorSet,
    k: int,
    n_walks: int,
    seed: int,
    prune_threshold: float = 0.0,
) -> TransitionMatrix:
    """Estimate the k-step transition matrix from seeded random walks.

    Runs ``n_walks`` independent walks of exactly ``k`` steps from every
    node; entry (i, j) is the fraction of walks from i ending at j. Entries
    below ``prune_threshold`` are dropped and each row is renormalized to
    sum exactly 1.
    """
    if k < 1:
        raise ValidationError(f"transition order must be >= 1, got {k}")
    if n_walks < 1:
        raise ValidationError(f"n_walks must be >= 1, got {n_walks}")
    if not 0.0 <= prune_threshold < 1.0:
        raise ValidationError(f"prune_threshold must be in [0, 1), got {prune_threshold}")
    n = operators.n_nodes
    if n >= 1 << 32 or n_walks >= 1 << 32:
        raise ValidationError("node count and n_walks must fit in 32 bits")
    p1 = one_step_transition(operators)
    aug = _cumulative_rows(p1)
    indptr, indices, counts = kernels.walk_end_counts(
        p1.indptr, p1.indices, aug, k, n_walks, seed
    )
    data = _normalized_frequencies(indptr, counts, n_walks, prune_threshold)
    keep = data >= 0.0
    matrix = _compact(n, indptr, indices, data, keep)
    return TransitionMatrix(
        order=k,
        matrix=matrix,
        provenance="estimated",
        n_walks=n_walks,
        seed=seed,
        prune_threshold=prune_threshold,
    )


def _normalized_frequencies(indptr, counts, n_walks, prune_threshold):
    """Counts -> pruned, renormalized frequencies; pruned entries become -1."""
    data = np.empty(counts.shape[0], dtype=np.float64)
    inv = 1.0 / n_walks
    for r in range(indptr.shape[0] - 1):
        s, e = int(indptr[r]), int(indptr[r + 1])
        if e == s:
            continue
        c = counts[s:e]
        freq = c * inv
        keep = freq >= prune_threshold
        if not keep.any():
            # A row must stay stochastic: keep the most frequent end node
            # (ties broken by lowest index, argmax semantics).
            keep = np.zeros(e - s, dtype=bool)
            keep[int(np.argmax(c))] = True
        kept_total = int(c[keep].sum())
        row = np.where(keep, c / float(kept_total), -1.0)
        vals = row[keep]
        # Absorb the float rounding residual into the largest entry so the
        # row sums to exactly 1.
        j = int(np.argmax(vals))
        for _ in range(4):
            residual = 1.0 - math.fsum(vals)
            if residual == 0.0:
                break
            vals[j] += residual
        row[keep] = vals
        data[s:e] = row
    return data


def _compact(n, indptr, indices, data, keep):
    counts = np.zeros(n, dtype=np.int64)
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    np.add.at(counts, rows[keep], 1)
    new_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=new_indptr[1:])
    return CSRMatrix(n, n, new_indptr, indices[keep], data[keep])
