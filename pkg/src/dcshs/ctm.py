"""Cluster transfer mapping.

A balanced subset (target domain) is condensed per class with k-means into a
smaller labelled set (source domain). A kernel projection ``W`` is then
learned that aligns the two domains under MMD while keeping each domain's
k-nearest-neighbour graph smooth:

    min_W  tr(W' K M K W) + tr(W' L W) + lam * tr(W' W)
    s.t.   W' K D K W = I_m

which is solved as the generalized symmetric eigenproblem
``(KMK + L + lam I) w = mu (KDK) w`` keeping the ``m`` smallest pairs.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .data import MAJORITY, MINORITY
from .numerics import kmeans, knn_indices, sign_normalize, sq_distances

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CtmConfig:
    cluster_ratio: float = 0.5
    embed_dim: int = 8
    lam: float = 0.01
    kernel_gamma: float = 100.0
    affinity_mode: str = "simple"
    heat_f: float = 1.0
    knn_k: int = 5
    max_target: int = 1000

    def __post_init__(self):
        if not 0.0 < self.cluster_ratio <= 1.0:
            raise ValueError("cluster_ratio must lie in (0, 1]")
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.kernel_gamma <= 0:
            raise ValueError("kernel_gamma must be positive")
        if self.affinity_mode not in ("simple", "heat"):
            raise ValueError(f"unknown affinity mode {self.affinity_mode!r}")
        if self.heat_f <= 0:
            raise ValueError("heat_f must be positive")
        if self.knn_k < 1:
            raise ValueError("knn_k must be positive")
        if self.max_target < 4:
            raise ValueError("max_target must be at least 4")


@dataclass(frozen=True)
class CtmModel:
    anchors: np.ndarray
    W: np.ndarray
    config: CtmConfig
    n_source: int
    eigenvalues: np.ndarray = field(default=None)
    flags: tuple = ()

    @property
    def source_rows(self):
        return np.arange(self.n_source)

    @property
    def target_rows(self):
        return np.arange(self.n_source, self.anchors.shape[0])

    @property
    def embed_dim(self):
        return self.W.shape[1]


def gaussian_kernel(A, B, gamma):
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    return np.exp(-gamma * sq_distances(A, B))


def mmd_matrix(n_s, n_t):
    """Matrix ``M`` with ``tr(K M)`` equal to the empirical squared MMD."""
    if n_s < 1 or n_t < 1:
        raise ValueError("both domains need at least one sample")
    e = np.concatenate([np.full(n_s, 1.0 / n_s), np.full(n_t, -1.0 / n_t)])
    return np.outer(e, e)


def affinity_laplacian(D, k=5, mode="simple", f=1.0):
    """Symmetric kNN affinity, its degree matrix and graph Laplacian.

    ``A[i, j]`` is nonzero when either point is among the other's ``k``
    nearest neighbours: 1 in simple mode, ``exp(-|di - dj|^2 / f)`` in heat
    mode. ``k`` is clamped to ``rows - 1``; a single point gets an all-zero
    graph.
    """
    D = np.atleast_2d(np.asarray(D, dtype=float))
    n = D.shape[0]
    A = np.zeros((n, n))
    if n > 1:
        k = max(1, min(int(k), n - 1))
        dist = sq_distances(D, D)
        nn = knn_indices(dist, k)
        linked = np.zeros((n, n), dtype=bool)
        linked[np.repeat(np.arange(n), k), nn.ravel()] = True
        linked |= linked.T
        if mode == "simple":
            A[linked] = 1.0
        elif mode == "heat":
            A[linked] = np.exp(-dist[linked] / f)
        else:
            raise ValueError(f"unknown affinity mode {mode!r}")
    Ddiag = np.diag(A.sum(axis=1))
    return A, Ddiag - A, Ddiag


def condense(X, y, ratio=0.5, seed=0, n_init=1):
    """Replace each class by ``max(1, round(ratio * size))`` k-means centroids."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    parts, labels = [], []
    for c in (MAJORITY, MINORITY):
        Xc = X[y == c]
        if Xc.shape[0] == 0:
            continue
        k = min(Xc.shape[0], max(1, int(round(ratio * Xc.shape[0]))))
        if k == Xc.shape[0]:
            cents = Xc.copy()
        else:
            cents = kmeans(Xc, k, seed=[*np.atleast_1d(seed).tolist(), c], n_init=n_init).centroids
        parts.append(cents)
        labels.append(np.full(k, c))
    return np.vstack(parts), np.concatenate(labels)


def _system(D_s, D_t, cfg):
    X = np.vstack([D_s, D_t])
    n_s, n_t = D_s.shape[0], D_t.shape[0]
    K = gaussian_kernel(X, X, cfg.kernel_gamma)
    M = mmd_matrix(n_s, n_t)
    A_s, L_s, Dg_s = affinity_laplacian(D_s, cfg.knn_k, cfg.affinity_mode, cfg.heat_f)
    A_t, L_t, Dg_t = affinity_laplacian(D_t, cfg.knn_k, cfg.affinity_mode, cfg.heat_f)
    L = scipy.linalg.block_diag(L_s, L_t)
    Dg = scipy.linalg.block_diag(Dg_s, Dg_t)
    # M = e e^T and Dg is diagonal, so both products reduce to cheap forms
    Ke = K @ np.concatenate([np.full(n_s, 1.0 / n_s), np.full(n_t, -1.0 / n_t)])
    lhs = np.outer(Ke, Ke) + L + cfg.lam * np.eye(n_s + n_t)
    rhs = (K * np.diag(Dg)) @ K
    return X, K, M, L, Dg, 0.5 * (lhs + lhs.T), 0.5 * (rhs + rhs.T)


def ctm_system(D_s, D_t, cfg=CtmConfig()):
    """The matrices of the transfer problem, keyed by name (for inspection/tests)."""
    X, K, M, L, Dg, lhs, rhs = _system(np.atleast_2d(D_s), np.atleast_2d(D_t), cfg)
    return {"anchors": X, "K": K, "M": M, "L": L, "D": Dg, "lhs": lhs, "rhs": rhs}


def ctm_fit(D_s, D_t, cfg=CtmConfig()):
    """Learn the transfer projection over the stacked source and target rows."""
    D_s = np.atleast_2d(np.asarray(D_s, dtype=float))
    D_t = np.atleast_2d(np.asarray(D_t, dtype=float))
    if D_s.shape[0] == 0 or D_t.shape[0] == 0:
        raise ValueError("both domains must be nonempty")
    if D_s.shape[1] != D_t.shape[1]:
        raise ValueError("source and target dimensions differ")
    X, K, M, L, Dg, lhs, rhs = _system(D_s, D_t, cfg)
    n = X.shape[0]
    flags = []
    m = min(cfg.embed_dim, n - 1) if n > 1 else 1

    # rank of K D K limits how many constrained directions exist
    evals_rhs = np.linalg.eigvalsh(rhs)
    top = max(evals_rhs[-1], 1e-300)
    rank = int((evals_rhs > top * 1e-10).sum())
    if rank < n:
        rhs = rhs + 1e-9 * top * np.eye(n)
        flags.append("regularized")
    if m > rank:
        m = max(1, rank)
        flags.append("reduced_dim")
    mu, W = scipy.linalg.eigh(lhs, rhs, subset_by_index=[0, m - 1])
    W = sign_normalize(W)
    # renormalise columns against the (possibly regularised) constraint
    scale = np.sqrt(np.einsum("ij,ij->j", W, rhs @ W))
    W = W / scale
    if flags:
        log.debug("ctm_fit flags: %s", flags)
    return CtmModel(anchors=X, W=W, config=cfg, n_source=D_s.shape[0],
                    eigenvalues=mu, flags=tuple(flags))


def ctm_transform(model, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.anchors.shape[1]:
        raise ValueError(f"expected {model.anchors.shape[1]} features, got {X.shape[1]}")
    return gaussian_kernel(X, model.anchors, model.config.kernel_gamma) @ model.W


def objective(model_or_W, lhs):
    W = model_or_W.W if isinstance(model_or_W, CtmModel) else model_or_W
    return float(np.trace(W.T @ lhs @ W))


def constraint_residual(W, rhs):
    m = W.shape[1]
    return float(np.linalg.norm(W.T @ rhs @ W - np.eye(m)))
