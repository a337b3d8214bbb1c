"""Linear-algebra and clustering primitives shared by the pipeline stages.

Everything here is a pure function of its inputs. Randomness only enters
through an explicit integer seed.
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EigenResult:
    """Eigenpairs of a symmetric matrix, largest eigenvalue first.

    ``vectors[:, i]`` is the unit eigenvector for ``values[i]``.
    """

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class KMeansResult:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int = 0


def as_matrix(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X


def center(X):
    """Subtract the column means."""
    X = as_matrix(X)
    if X.shape[0] == 0:
        raise ValueError("empty input")
    return X - X.mean(axis=0)


def covariance(Xc):
    """Sample covariance of already-centered data (divisor n - 1)."""
    Xc = as_matrix(Xc, "Xc")
    n = Xc.shape[0]
    if n < 2:
        raise ValueError("insufficient samples")
    C = Xc.T @ Xc / (n - 1)
    return 0.5 * (C + C.T)


def sign_normalize(vectors):
    """Flip each column so its first non-negligible component is positive."""
    V = np.array(vectors, dtype=float, copy=True)
    for j in range(V.shape[1]):
        col = V[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * max(1.0, np.abs(col).max()))
        if nz.size and col[nz[0]] < 0:
            V[:, j] = -col
    return V


def sym_eig(C):
    """Eigendecomposition of a symmetric matrix, values sorted descending.

    Small asymmetries (up to 1e-8 relative) are symmetrized away; larger ones
    are rejected.
    """
    C = as_matrix(C, "C")
    if C.shape[0] != C.shape[1]:
        raise ValueError(f"matrix must be square, got {C.shape}")
    scale = max(1.0, np.abs(C).max())
    if np.abs(C - C.T).max() > 1e-8 * scale:
        raise ValueError("matrix is not symmetric")
    C = 0.5 * (C + C.T)
    values, vectors = np.linalg.eigh(C)
    order = np.argsort(-values, kind="stable")
    return EigenResult(values=values[order], vectors=sign_normalize(vectors[:, order]))


def sq_distances(A, B, exact=True):
    """Pairwise squared Euclidean distances.

    The exact form sums squared coordinate differences, so duplicates are at
    distance exactly 0 and ties are reproducible. ``exact=False`` uses the
    Gram expansion, which is faster but carries rounding noise.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if not exact:
        D = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
        np.maximum(D, 0.0, out=D)
        return D
    D = np.empty((A.shape[0], B.shape[0]))
    step = max(1, 2_000_000 // max(1, B.shape[0] * max(1, A.shape[1])))
    for s in range(0, A.shape[0], step):
        diff = A[s:s + step, None, :] - B[None, :, :]
        D[s:s + step] = np.einsum("ijk,ijk->ij", diff, diff)
    return D


def smallest_k(d, k):
    """Indices of the ``k`` smallest entries of ``d``, equal to
    ``argsort(d, kind="stable")[:k]`` but without sorting everything."""
    d = np.asarray(d)
    if k >= d.size:
        return np.argsort(d, kind="stable")[:k]
    kth = np.partition(d, k - 1)[k - 1]
    idx = np.flatnonzero(d <= kth)
    return idx[np.argsort(d[idx], kind="stable")[:k]]


def knn_indices(D, k, exclude_self=True):
    """Indices of the ``k`` nearest columns for every row of a distance matrix.

    Distance ties resolve to the lower column index. With ``exclude_self`` the
    diagonal is skipped (``D`` must then be square).
    """
    D = np.array(D, dtype=float, copy=True)
    if exclude_self:
        np.fill_diagonal(D, np.inf)
    if k >= D.shape[1]:
        return np.argsort(D, axis=1, kind="stable")[:, :k]
    kth = np.partition(D, k - 1, axis=1)[:, k - 1]
    inside = D <= kth[:, None]
    out = np.empty((D.shape[0], k), dtype=np.intp)
    clean = inside.sum(1) == k
    if clean.any():
        # the k members in index order, then a stable sort by distance
        cols = np.nonzero(inside[clean])[1].reshape(-1, k)
        rows = np.flatnonzero(clean)[:, None]
        out[clean] = np.take_along_axis(
            cols, np.argsort(D[rows, cols], axis=1, kind="stable"), axis=1)
    for i in np.flatnonzero(~clean):
        out[i] = smallest_k(D[i], k)
    return out


def _kmeans_pp(X, k, rng):
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((X - X[chosen[0]]) ** 2).sum(1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a chosen centre
            free = np.setdiff1d(np.arange(n), chosen)
            idx = int(free[rng.integers(free.size)])
        else:
            idx = int(rng.choice(n, p=d2 / total))
        chosen.append(idx)
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(1))
    return X[chosen].copy()


def _repair_empty(X, labels, centroids, k):
    """Move the farthest point of a multi-member cluster into each empty one.

    Farthest first, never emptying a donor; lower row index wins on ties.
    """
    counts = np.bincount(labels, minlength=k)
    empty = np.flatnonzero(counts == 0)
    dist = ((X - centroids[labels]) ** 2).sum(1)
    for far in np.argsort(-dist, kind="stable"):
        if empty.size == 0:
            break
        if counts[labels[far]] < 2:
            continue
        counts[labels[far]] -= 1
        labels[far] = empty[0]
        centroids[empty[0]] = X[far]
        empty = empty[1:]
    return labels


def _means(X, labels, k):
    counts = np.bincount(labels, minlength=k)
    sums = np.column_stack([np.bincount(labels, weights=X[:, j], minlength=k)
                            for j in range(X.shape[1])])
    return sums / counts[:, None]


def _lloyd(X, k, rng, max_iter):
    centroids = _kmeans_pp(X, k, rng)
    # exact distances keep equidistant ties on the lowest index; the Gram
    # form is only used where the exact one would dominate runtime
    exact = X.shape[0] * k * X.shape[1] <= 200_000
    labels = None
    for it in range(1, max_iter + 1):
        if exact:
            new = np.argmin(sq_distances(X, centroids), axis=1)
        else:
            # the per-point norm is constant along each row, so it can be dropped
            new = np.argmin((centroids * centroids).sum(1) - 2.0 * X @ centroids.T, axis=1)
        if np.bincount(new, minlength=k).min() == 0:
            new = _repair_empty(X, new, centroids, k)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centroids = _means(X, labels, k)
    centroids = _means(X, labels, k)
    inertia = float(((X - centroids[labels]) ** 2).sum())
    return labels, centroids, inertia, it


def kmeans(X, k, seed=0, n_init=10, max_iter=300):
    """Lloyd's k-means with k-means++ seeding.

    With ``n_init > 1`` the lowest-inertia run wins (earliest on ties). The
    result never contains an empty cluster and is fully determined by
    ``(X, k, seed, n_init)``.
    """
    X = as_matrix(X)
    n = X.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > n:
        raise ValueError("k exceeds sample count")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        run = _lloyd(X, k, rng, max_iter)
        if best is None or run[2] < best[2]:
            best = run
    labels, centroids, inertia, it = best
    return KMeansResult(assignments=labels, centroids=centroids, inertia=inertia, n_iter=it)
