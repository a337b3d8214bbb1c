"""Stage-wise hybrid sampling: overlap search, undersampling and filtered
oversampling of one cross-complete subset.

All neighbourhoods use squared Euclidean distance over the whole subset, with
ties going to the lower row index. A "plurality" over two values needs a
strict majority; an even split never counts.
"""
from dataclasses import dataclass

import numpy as np

from .data import MAJORITY, MINORITY
from .numerics import knn_indices, smallest_k, sq_distances

STALL_FACTOR = 50
JITTER_SCALE = 1e-3


@dataclass(frozen=True)
class OverlapLabeling:
    overlap: np.ndarray          # True = overlapping (l2)
    initial: np.ndarray          # seed set S_d
    all_majority_overlap: bool
    n_passes: int = 0

    @property
    def n_overlap(self):
        return int(self.overlap.sum())


@dataclass(frozen=True)
class BalancedSubset:
    X: np.ndarray
    y: np.ndarray
    synthetic_mask: np.ndarray
    fallback_mask: np.ndarray
    parents: np.ndarray          # (n, 2) rows a synthetic point interpolates; -1 otherwise
    alphas: np.ndarray
    minority_label: int
    stalled: bool = False
    origin: object = None

    @property
    def n_synthetic(self):
        return int(self.synthetic_mask.sum())


def _check_subset(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X and y disagree in length")
    if not ((y == MAJORITY).any() and (y == MINORITY).any()):
        raise ValueError("subset lacks both classes")
    return X, y


def _strict_majority(count, k):
    return 2 * count > k


def initial_overlap(X, y, R1=5):
    """Noise samples plus cross-class nearest-neighbour pairs.

    A sample is noise when a strict majority of its ``R1`` nearest neighbours
    carries the other class label. A pair is a local boundary pair when one
    member's single nearest neighbour belongs to the other class.
    """
    X, y = _check_subset(X, y)
    n = X.shape[0]
    R1 = max(1, min(int(R1), n - 1))
    D = sq_distances(X, X)
    nn = knn_indices(D, R1)
    noise = _strict_majority((y[nn] != y[:, None]).sum(1), R1)
    first = nn[:, 0]
    cross = y[first] != y
    boundary = cross.copy()
    boundary[first[cross]] = True
    seed_set = noise | boundary
    return OverlapLabeling(overlap=seed_set.copy(), initial=seed_set,
                           all_majority_overlap=bool(seed_set[y == MAJORITY].all()))


def _expand(X, nn, overlap):
    """One ascending-index pass of region growth; returns number promoted."""
    k = nn.shape[1]
    promoted = 0
    for i in range(X.shape[0]):
        if overlap[i]:
            continue
        nb = nn[i]
        mask = overlap[nb]
        n_o = int(mask.sum())
        if not _strict_majority(n_o, k):
            continue
        O = X[nb[mask]]
        mu = O.mean(axis=0)
        d1 = ((X[i] - mu) ** 2).sum()
        d2 = ((O - mu) ** 2).sum(axis=1).mean()
        if d1 <= d2 or n_o == k:
            overlap[i] = True
            promoted += 1
    return promoted


def lords(X, y, R1=5, R2=5):
    """Grow the initial overlap set to a fixpoint.

    A non-overlapping sample whose ``R2`` neighbours are mostly overlapping is
    promoted if it sits no farther from their centre than they do on average,
    or if all of its neighbours are overlapping. Promotions take effect
    immediately within a pass.
    """
    X, y = _check_subset(X, y)
    seed = initial_overlap(X, y, R1)
    overlap = seed.overlap.copy()
    passes = 0
    if overlap.any():
        k = max(1, min(int(R2), X.shape[0] - 1))
        nn = knn_indices(sq_distances(X, X), k)
        while True:
            passes += 1
            if _expand(X, nn, overlap) == 0:
                break
    return OverlapLabeling(overlap=overlap, initial=seed.initial,
                           all_majority_overlap=bool(overlap[y == MAJORITY].all()),
                           n_passes=passes)


def undersample(y, labeling):
    """Keep-mask that drops overlapping majority samples.

    When every majority sample is overlapping nothing is dropped.
    """
    y = np.asarray(y)
    if labeling.all_majority_overlap:
        return np.ones(y.shape[0], dtype=bool)
    return ~(labeling.overlap & (y == MAJORITY))


def interpolate(a, b, alpha):
    return a + alpha * (b - a)


MAX_BATCH = 1024


def _filter_counts(Xs, sqn, is_min, news, k):
    """Minority count among the ``k`` nearest rows of ``Xs`` for each new point.

    A Gram-form pass narrows the search; the survivors are re-ranked with
    exact distances, so the result equals a stable full sort.
    """
    nn2 = (news * news).sum(1)
    G = sqn[None, :] - 2.0 * news @ Xs.T + nn2[:, None]
    kth = np.partition(G, k - 1, axis=1)[:, k - 1]
    slack = 1e-9 * (1.0 + sqn.max() + nn2)
    inside = G <= (kth + slack)[:, None]
    out = (inside & is_min[None, :]).sum(1)
    # rows with more than k candidates have a near-tie at the boundary
    for i in np.flatnonzero(inside.sum(1) > k):
        idx = np.flatnonzero(inside[i])
        diff = Xs[idx] - news[i]
        near = idx[smallest_k((diff * diff).sum(1), k)]
        out[i] = int(is_min[near].sum())
    return out


def _oversample(X, y, k, rng, filtered, grow_pool, batch_cap=MAX_BATCH):
    n, dim = X.shape
    counts = np.bincount(y, minlength=2)
    minority = MINORITY if counts[MINORITY] <= counts[MAJORITY] else MAJORITY
    deficit = int(abs(counts[MAJORITY] - counts[MINORITY]))
    total = n + deficit
    Xa = np.empty((total, dim))
    Xa[:n] = X
    ya = np.empty(total, dtype=int)
    ya[:n] = y
    sqn = np.empty(total)
    sqn[:n] = (X * X).sum(1)
    parents = np.full((total, 2), -1, dtype=int)
    alphas = np.full(total, np.nan)
    fallback = np.zeros(total, dtype=bool)
    seeds = np.flatnonzero(y == minority)
    in_pool = np.zeros(total, dtype=bool)
    in_pool[seeds] = True
    near_cache = {}
    size = n
    budget = STALL_FACTOR * max(deficit, 1)
    rejected = 0
    stalled = False
    turn = 0
    batch = 1

    def neighbours(s):
        # the R nearest pool members of seed s, cached until the pool changes
        if s not in near_cache:
            in_pool[s] = False
            cand = np.flatnonzero(in_pool[:size])
            in_pool[s] = True
            d = ((Xa[cand] - Xa[s]) ** 2).sum(1)
            near_cache[s] = cand[smallest_k(d, min(k, cand.size))]
        return near_cache[s]

    def commit(new, pair, alpha, lonely):
        nonlocal size
        Xa[size] = new
        ya[size] = minority
        sqn[size] = float(new @ new)
        parents[size] = pair
        alphas[size] = alpha
        fallback[size] = stalled or lonely
        if grow_pool:
            in_pool[size] = True
            near_cache.clear()
        size += 1

    while size < total:
        lonely = int(in_pool[:size].sum()) < 2
        kf = min(k, size)
        if filtered and not stalled and 2 * int((ya[:size] == minority).sum()) <= kf:
            # no candidate can win a majority: burn the draws the rejected
            # candidates would have used and stall right away
            left = budget - rejected
            while left:
                step = min(left, 1 << 14)
                if lonely:
                    rng.normal(0.0, JITTER_SCALE, (step, dim))
                else:
                    rng.random((step, 2))
                left -= step
            turn += budget - rejected
            rejected = budget
            stalled = True
            continue
        if filtered and not stalled and not lonely:
            # score a batch of candidates against the current set; the set
            # only changes on acceptance, so the draws after the first
            # accepted one are rewound and the outcome is batch-independent
            b = min(batch, budget - rejected)
            state = rng.bit_generator.state
            u = rng.random((b, 2))
            idx = seeds[(turn + np.arange(b)) % seeds.size]
            nbs = np.array([neighbours(int(s))[int(u[i, 0] * neighbours(int(s)).size)]
                            for i, s in enumerate(idx)])
            news = interpolate(Xa[idx], Xa[nbs], u[:, 1:2])
            got = _filter_counts(Xa[:size], sqn[:size], ya[:size] == minority, news, kf)
            ok = np.flatnonzero(2 * got > kf)
            if ok.size == 0:
                turn += b
                rejected += b
                if rejected >= budget:
                    stalled = True
                batch = min(2 * batch, batch_cap)
                continue
            j = int(ok[0])
            rng.bit_generator.state = state
            rng.random((j + 1, 2))
            turn += j + 1
            rejected = 0
            commit(news[j], (int(idx[j]), int(nbs[j])), float(u[j, 1]), False)
            batch = min(2 * (j + 1), batch_cap)
            continue
        s = int(seeds[turn % seeds.size])
        turn += 1
        if lonely:
            new = Xa[s] + rng.normal(0.0, JITTER_SCALE, dim)
            pair, alpha = (s, s), np.nan
        else:
            near = neighbours(s)
            u = rng.random(2)
            nb = int(near[int(u[0] * near.size)])
            alpha = float(u[1])
            new = interpolate(Xa[s], Xa[nb], alpha)
            pair = (s, nb)
        if filtered and not stalled:
            got = _filter_counts(Xa[:size], sqn[:size], ya[:size] == minority, new[None], kf)
            if 2 * got[0] <= kf:
                rejected += 1
                if rejected >= budget:
                    stalled = True
                continue
            rejected = 0
        commit(new, pair, alpha, lonely)
    synthetic = np.zeros(total, dtype=bool)
    synthetic[n:] = True
    return BalancedSubset(X=Xa, y=ya, synthetic_mask=synthetic, fallback_mask=fallback,
                          parents=parents, alphas=alphas, minority_label=minority,
                          stalled=stalled)


def ifo(X, y, R3=5, seed=0):
    """Iterative filtering oversampling up to equal class counts.

    The currently smaller class is treated as the minority. Each candidate is
    an interpolation between a minority seed (taken round-robin) and one of
    its ``R3`` nearest minority neighbours, and is kept only if a strict
    majority of its ``R3`` nearest neighbours in the current set is minority.
    Accepted samples join both the neighbour pool and the data. After
    ``50 * deficit`` consecutive rejections the filter is switched off and the
    result is flagged as stalled.
    """
    X, y = _check_subset(X, y)
    rng = np.random.default_rng(seed)
    return _oversample(X, y, max(1, int(R3)), rng, filtered=True, grow_pool=True)


def smote(X, y, k=5, seed=0):
    """Plain SMOTE on the original minority samples, no filtering."""
    X, y = _check_subset(X, y)
    rng = np.random.default_rng(seed)
    return _oversample(X, y, max(1, int(k)), rng, filtered=False, grow_pool=False)
