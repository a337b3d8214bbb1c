import numpy as np
import pytest
import scipy.linalg

from dcshs.ctm import (CtmConfig, affinity_laplacian, condense, constraint_residual,
                       ctm_fit, ctm_system, ctm_transform, gaussian_kernel, mmd_matrix,
                       objective)

CFG = CtmConfig(kernel_gamma=1.0, embed_dim=3)


def domains(seed, n_s=6, n_t=9, dim=2, shift=0.5):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n_s, dim)), rng.normal(shift, 1, size=(n_t, dim))


def feasible(rng, n, m, rhs):
    """Random W rescaled so that W' rhs W = I."""
    W = rng.normal(size=(n, m))
    G = W.T @ rhs @ W
    vals, vecs = np.linalg.eigh(G)
    return W @ vecs @ np.diag(vals ** -0.5) @ vecs.T


# --- oracles -------------------------------------------------------------

def test_kernel_direct_value():
    assert gaussian_kernel([[0.0]], [[1.0]], 1.0)[0, 0] == pytest.approx(np.exp(-1))


def test_kernel_narrows_to_identity_for_large_gamma():
    X = np.array([[0.0], [1.0], [2.5]])
    K = gaussian_kernel(X, X, 1e4)
    np.testing.assert_allclose(K, np.eye(3), atol=1e-300)


def test_mmd_matrix_two_plus_two():
    M = mmd_matrix(2, 2)
    np.testing.assert_allclose(M[:2, :2], 0.25)
    np.testing.assert_allclose(M[2:, 2:], 0.25)
    np.testing.assert_allclose(M[:2, 2:], -0.25)
    np.testing.assert_allclose(mmd_matrix(3, 5).sum(1), 0, atol=1e-15)


@pytest.mark.parametrize("seed", range(10))
def test_trace_form_equals_direct_mmd(seed):
    S, T = domains(seed, 3, 4)
    X = np.vstack([S, T])
    K = gaussian_kernel(X, X, 0.7)
    k = lambda A, B: gaussian_kernel(A, B, 0.7)
    direct = k(S, S).mean() + k(T, T).mean() - 2 * k(S, T).mean()
    trace = np.trace(K @ mmd_matrix(3, 4))
    assert trace == pytest.approx(direct, abs=1e-10)
    assert trace >= -1e-12


def test_identical_domains_have_zero_mmd():
    S, _ = domains(0)
    X = np.vstack([S, S])
    assert abs(np.trace(gaussian_kernel(X, X, 1.0) @ mmd_matrix(6, 6))) < 1e-12


def test_affinity_hand_case():
    A, L, D = affinity_laplacian(np.array([[0.0], [1.0], [10.0]]), k=1)
    np.testing.assert_array_equal(A, [[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    np.testing.assert_array_equal(np.diag(D), [1, 2, 1])
    np.testing.assert_allclose(L.sum(1), 0)


def test_affinity_properties():
    rng = np.random.default_rng(1)
    P = rng.normal(size=(20, 3))
    for mode in ("simple", "heat"):
        A, L, _ = affinity_laplacian(P, k=4, mode=mode, f=0.5)
        np.testing.assert_array_equal(A, A.T)
        np.testing.assert_allclose(L.sum(1), 0, atol=1e-12)
        assert np.linalg.eigvalsh(L).min() >= -1e-8
    simple = affinity_laplacian(P, k=4)[0]
    heat = affinity_laplacian(P, k=4, mode="heat", f=1e12)[0]
    np.testing.assert_allclose(heat, simple, atol=1e-10)


def test_block_diagonal_laplacian():
    S, T = domains(2)
    sysm = ctm_system(S, T, CFG)
    assert not sysm["L"][:6, 6:].any() and not sysm["L"][6:, :6].any()
    np.testing.assert_allclose(sysm["L"][:6, :6], affinity_laplacian(S, 5)[1])


# --- fitted projection ---------------------------------------------------

@pytest.mark.parametrize("seed", range(10))
def test_fit_is_the_constrained_minimum(seed):
    S, T = domains(seed)
    model = ctm_fit(S, T, CFG)
    sysm = ctm_system(S, T, CFG)
    m = model.embed_dim
    assert constraint_residual(model.W, sysm["rhs"]) <= 1e-6 * m
    best = objective(model, sysm["lhs"])
    rng = np.random.default_rng(seed)
    for _ in range(100):
        W0 = feasible(rng, S.shape[0] + T.shape[0], m, sysm["rhs"])
        assert best <= objective(W0, sysm["lhs"]) + 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_generalised_eigen_residual(seed):
    S, T = domains(seed)
    model = ctm_fit(S, T, CFG)
    sysm = ctm_system(S, T, CFG)
    for mu, w in zip(model.eigenvalues, model.W.T):
        r = sysm["lhs"] @ w - mu * sysm["rhs"] @ w
        assert np.linalg.norm(r) <= 1e-6


def test_constraint_holds_on_regularised_fits():
    # duplicated rows make K D K singular; the fit regularises and flags it
    rng = np.random.default_rng(0)
    T = rng.random((12, 3))
    model = ctm_fit(T[:6], T, CtmConfig())
    assert "regularized" in model.flags
    sysm = ctm_system(T[:6], T, CtmConfig())
    # the residual is measured against the unregularised constraint matrix
    assert constraint_residual(model.W, sysm["rhs"]) <= 1e-6 * model.embed_dim


def test_equal_domains_embed_identically():
    S, _ = domains(3)
    model = ctm_fit(S, S, CFG)
    Z = ctm_transform(model, model.anchors)
    np.testing.assert_allclose(Z[:6], Z[6:], atol=1e-10)


def test_transform_consistency_and_shape():
    S, T = domains(4)
    model = ctm_fit(S, T, CFG)
    sysm = ctm_system(S, T, CFG)
    np.testing.assert_allclose(ctm_transform(model, model.anchors), sysm["K"] @ model.W)
    X = np.vstack([T[:2], T[:1]])
    Z = ctm_transform(model, X)
    assert Z.shape == (3, 3)
    np.testing.assert_array_equal(Z[0], Z[2])
    with pytest.raises(ValueError, match="expected 2 features"):
        ctm_transform(model, np.zeros((1, 3)))


def test_embedding_dimension_is_clamped():
    S, T = domains(5, n_s=2, n_t=3)
    model = ctm_fit(S, T, CtmConfig(kernel_gamma=1.0, embed_dim=8))
    assert model.embed_dim == 4


def test_eigenproblem_matches_scipy_reference():
    S, T = domains(6)
    model = ctm_fit(S, T, CFG)
    sysm = ctm_system(S, T, CFG)
    ref = scipy.linalg.eigvalsh(sysm["lhs"], sysm["rhs"])[:3]
    np.testing.assert_allclose(model.eigenvalues, ref, rtol=1e-8, atol=1e-12)


# --- condensation --------------------------------------------------------

def test_condense_counts_and_labels():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(15, 2))
    y = np.r_[np.zeros(10, int), np.ones(5, int)]
    C, yc = condense(X, y, 0.5, seed=0)
    assert np.bincount(yc).tolist() == [5, 2]
    C1, y1 = condense(X, y, 1.0, seed=0)
    np.testing.assert_array_equal(C1, np.vstack([X[y == 0], X[y == 1]]))
    assert np.bincount(condense(X[:11], y[:11], 0.01)[1]).tolist() == [1, 1]


@pytest.mark.parametrize("kw", [dict(cluster_ratio=0), dict(cluster_ratio=1.5),
                                dict(embed_dim=0), dict(lam=-1), dict(kernel_gamma=0),
                                dict(affinity_mode="cosine"), dict(knn_k=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        CtmConfig(**kw)
