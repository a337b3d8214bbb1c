"""Projective clustering and cross-complete subset construction.

The data are projected onto their leading principal directions; for every
candidate dimension each class is clustered with k-means and the summed
Davies-Bouldin index of the two clusterings is recorded. The dimension with
the lowest sum fixes the clustering, and every majority cluster is then
paired with every minority cluster.
"""
import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .data import MAJORITY, MINORITY
from .numerics import center, covariance, kmeans, sym_eig

log = logging.getLogger(__name__)

_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class ProjectiveClustering:
    d_t: int
    T: np.ndarray
    maj_clusters: tuple
    min_clusters: tuple
    db_score: float
    db_maj: float
    db_min: float
    db_by_dim: np.ndarray
    degenerate: bool = False

    @property
    def nc_maj(self):
        return len(self.maj_clusters)

    @property
    def nc_min(self):
        return len(self.min_clusters)


@dataclass(frozen=True)
class CrossCompleteSubset:
    """One majority cluster paired with one minority cluster.

    Row indices point into the training set the clustering was built on;
    features are taken from the original (unprojected) space.
    """

    maj_rows: np.ndarray
    min_rows: np.ndarray
    maj_cluster: int
    min_cluster: int
    projected: bool = False

    @property
    def rows(self):
        return np.concatenate([self.maj_rows, self.min_rows])

    def take(self, X, y):
        rows = self.rows
        return X[rows], y[rows]


def dbi_details(clusters):
    """Davies-Bouldin index with squared scatter and squared separation.

    ``clusters`` is a sequence of ``(members, centroid)`` pairs. Returns the
    index and whether any centroid pair was closer than 1e-12 (in which case
    that denominator was clamped).
    """
    clusters = [(np.atleast_2d(np.asarray(m, dtype=float)), np.ravel(c).astype(float))
                for m, c in clusters]
    if not clusters:
        raise ValueError("need at least one cluster")
    for members, _ in clusters:
        if members.shape[0] == 0:
            raise ValueError("empty cluster")
    nc = len(clusters)
    if nc == 1:
        return 0.0, False
    scatter = np.array([((m - c) ** 2).sum(1).mean() for m, c in clusters])
    cents = np.stack([c for _, c in clusters])
    sep = ((cents[:, None, :] - cents[None, :, :]) ** 2).sum(-1)
    degenerate = bool((sep[~np.eye(nc, dtype=bool)] < _DENOM_FLOOR).any())
    sep = np.maximum(sep, _DENOM_FLOOR)
    ratio = (scatter[:, None] + scatter[None, :]) / sep
    np.fill_diagonal(ratio, -np.inf)
    return float(ratio.max(axis=1).mean()), degenerate


def dbi(clusters):
    value, degenerate = dbi_details(clusters)
    if degenerate:
        log.warning("Davies-Bouldin index: coincident centroids, denominator clamped")
    return value


def _class_clustering(P, nc, seed, n_init):
    if nc == 1:
        labels = np.zeros(P.shape[0], dtype=int)
        cents = P.mean(axis=0, keepdims=True)
    else:
        km = kmeans(P, nc, seed=seed, n_init=n_init)
        labels, cents = km.assignments, km.centroids
    value, degenerate = dbi_details([(P[labels == j], cents[j]) for j in range(nc)])
    return labels, value, degenerate


class _Search:
    """Lazily evaluated (class, nc, d) -> clustering table for one training set."""

    def __init__(self, X, y, seed, n_init):
        self.X, self.y = np.asarray(X, dtype=float), np.asarray(y)
        if self.X.shape[0] < 2:
            raise ValueError("insufficient samples")
        Xc = center(self.X)
        self.eig = sym_eig(covariance(Xc))
        self.Xc = Xc
        self.rows = {c: np.flatnonzero(self.y == c) for c in (MAJORITY, MINORITY)}
        self.seed, self.n_init = seed, n_init
        self._cache = {}

    @property
    def n_dims(self):
        return self.X.shape[1]

    def projection(self, d):
        return self.eig.vectors[:, :d]

    def cluster(self, c, nc, d):
        key = (c, nc, d)
        if key not in self._cache:
            P = self.Xc[self.rows[c]] @ self.projection(d)
            self._cache[key] = _class_clustering(P, nc, [self.seed, d, c, nc], self.n_init)
        return self._cache[key]

    def evaluate(self, nc_maj, nc_min):
        for c, nc in ((MAJORITY, nc_maj), (MINORITY, nc_min)):
            if nc < 1 or nc > self.rows[c].size:
                raise ValueError("NC exceeds class size")
        scores = np.array([self.cluster(MAJORITY, nc_maj, d)[1] + self.cluster(MINORITY, nc_min, d)[1]
                           for d in range(1, self.n_dims + 1)])
        d_t = int(np.argmin(scores)) + 1
        lab_maj, db_maj, deg_maj = self.cluster(MAJORITY, nc_maj, d_t)
        lab_min, db_min, deg_min = self.cluster(MINORITY, nc_min, d_t)
        return ProjectiveClustering(
            d_t=d_t,
            T=self.projection(d_t),
            maj_clusters=tuple(self.rows[MAJORITY][lab_maj == j] for j in range(nc_maj)),
            min_clusters=tuple(self.rows[MINORITY][lab_min == j] for j in range(nc_min)),
            db_score=float(db_maj + db_min),
            db_maj=float(db_maj),
            db_min=float(db_min),
            db_by_dim=scores,
            degenerate=deg_maj or deg_min,
        )


def project_cluster_select(X, y, nc_maj, nc_min, seed=0, n_init=10):
    """Choose the projection dimension for fixed cluster counts.

    Ties in the summed index go to the smallest dimension.
    """
    return _Search(X, y, seed, n_init).evaluate(nc_maj, nc_min)


def select_clustering(X, y, nc_grid_maj=(2, 3), nc_grid_min=(2, 3), seed=0, n_init=10):
    """Search cluster-count pairs, keeping the one with the lowest index sum.

    Counts larger than the class size are skipped; if nothing in a grid is
    feasible the class falls back to a single cluster. Ties keep the earlier
    grid entry.
    """
    search = _Search(X, y, seed, n_init)
    n_maj, n_min = search.rows[MAJORITY].size, search.rows[MINORITY].size
    if n_maj == 0 or n_min == 0:
        raise ValueError("both classes must be present")
    grid_maj = [nc for nc in nc_grid_maj if 1 <= nc <= n_maj] or [1]
    grid_min = [nc for nc in nc_grid_min if 1 <= nc <= n_min] or [1]
    best = None
    for nc_maj, nc_min in itertools.product(grid_maj, grid_min):
        pc = search.evaluate(nc_maj, nc_min)
        if best is None or pc.db_score < best.db_score:
            best = pc
    return best


def build_ccs(pc):
    """Pair every majority cluster with every minority cluster."""
    return [CrossCompleteSubset(maj_rows=np.sort(maj), min_rows=np.sort(mn),
                                maj_cluster=i, min_cluster=j)
            for i, maj in enumerate(pc.maj_clusters)
            for j, mn in enumerate(pc.min_clusters)]
