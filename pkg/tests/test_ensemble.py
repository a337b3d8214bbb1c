import numpy as np
import pytest

from dcshs.ctm import CtmConfig
from dcshs.ensemble import (DcshsConfig, TrainedEnsemble, fit_dcshs, fit_method, fit_raw,
                            fuse, load_model, save_model)
from dcshs.evaluation import auc_score
from conftest import two_blobs


@pytest.fixture(scope="module")
def overlapping():
    X, y = two_blobs(150, 30, gap=1.2, dim=3, seed=0)
    Xt, yt = two_blobs(150, 30, gap=1.2, dim=3, seed=1)
    return X, y, Xt, yt


@pytest.fixture(scope="module")
def fitted(overlapping):
    X, y, _, _ = overlapping
    return fit_dcshs(X, y, DcshsConfig(), seed=3)


def test_member_count_is_product_of_cluster_counts(fitted):
    assert len(fitted.members) == fitted.nc_maj * fitted.nc_min >= 1
    assert len(fitted.subsets) == len(fitted.members)


def test_completeness_every_training_row_in_some_subset(fitted, overlapping):
    rows = np.unique(np.concatenate([s.rows for s in fitted.subsets]))
    np.testing.assert_array_equal(rows, np.arange(overlapping[1].size))


def test_forced_single_subset():
    X, y = two_blobs(40, 10, gap=2.0)
    model = fit_dcshs(X, y, DcshsConfig(nc_grid_maj=(1,), nc_grid_min=(1,)), seed=0)
    assert len(model.members) == 1
    labels, scores = model.predict(X)
    member = np.tanh(model.members[0].decision(model.scaler.transform(X)))
    np.testing.assert_allclose(scores, member)
    np.testing.assert_array_equal(labels, (member > 0).astype(int))


def test_beats_raw_linear_auc_on_overlapping_imbalanced_data():
    def sample(n_maj, n_min, seed):
        r = np.random.default_rng(seed)
        maj = r.normal(0, 1, (n_maj, 2))
        ring = r.normal(0, 0.4, (n_min, 2)) + 2.2 * np.array([[1, 0]]) * r.choice([-1, 1], (n_min, 1))
        return np.vstack([maj, ring]), np.r_[np.zeros(n_maj, int), np.ones(n_min, int)]

    X, y = sample(200, 40, 1)
    Xt, yt = sample(200, 40, 2)
    ens = fit_dcshs(X, y, seed=0)
    raw = fit_raw(X, y)
    assert auc_score(yt, ens.predict(Xt)[1]) > auc_score(yt, raw.predict(Xt)[1])


def test_separated_blobs_lose_no_majority_samples():
    X, y = two_blobs(40, 12, gap=40.0)
    model = fit_dcshs(X, y, seed=0)
    assert all(m.info["n_removed"] == 0 for m in model.members)


def test_prediction_is_deterministic_and_auc_above_chance(fitted, overlapping):
    _, _, Xt, yt = overlapping
    l1, s1 = fitted.predict(Xt)
    l2, s2 = fitted.predict(Xt)
    np.testing.assert_array_equal(s1, s2)
    assert auc_score(yt, s1) >= 0.5
    assert np.all(np.abs(s1) <= 1)


def test_fit_is_reproducible(overlapping):
    X, y, Xt, _ = overlapping
    a = fit_dcshs(X, y, seed=5).predict(Xt)[1]
    b = fit_dcshs(X, y, seed=5).predict(Xt)[1]
    np.testing.assert_array_equal(a, b)


def test_fusion_rules():
    d = np.array([[1.0, -2.0, 0.5], [3.0, -1.0, -0.5]])
    np.testing.assert_allclose(fuse(d), np.tanh(d).mean(0))
    np.testing.assert_array_equal(fuse(d, "vote"), [1.0, -1.0, 0.0])
    np.testing.assert_allclose(fuse(d[::-1]), fuse(d))
    agree = np.array([[0.2, -0.3], [1.5, -0.1], [0.7, -2.0]])
    assert ((fuse(agree) > 0) == (agree[0] > 0)).all()
    with pytest.raises(ValueError):
        fuse(d, "max")


def test_dimension_mismatch(fitted):
    with pytest.raises(ValueError, match="expected 3 features"):
        fitted.predict(np.zeros((2, 4)))


def test_training_requires_two_samples_per_class():
    with pytest.raises(ValueError, match="at least 2"):
        fit_dcshs(np.zeros((4, 1)) + np.arange(4)[:, None], np.array([0, 0, 0, 1]))


def test_method_lookup():
    X, y = two_blobs()
    for name in ("dcshs", "smote_baseline", "raw"):
        labels, scores = fit_method(name, X, y, seed=0).predict(X)
        assert labels.shape == scores.shape == (50,)
    with pytest.raises(ValueError, match="unknown method"):
        fit_method("boost", X, y)


def test_serialisation_round_trip_is_bit_exact(fitted, overlapping, tmp_path):
    _, _, Xt, _ = overlapping
    path = save_model(fitted, tmp_path / "m.npz")
    back = load_model(path)
    assert isinstance(back, TrainedEnsemble)
    assert back.config == fitted.config
    for a, b in zip(fitted.predict(Xt), back.predict(Xt)):
        np.testing.assert_array_equal(a, b)


def test_load_rejects_foreign_files(tmp_path):
    p = tmp_path / "x.npz"
    np.savez(p, meta=np.frombuffer(b'{"format": "other"}', dtype=np.uint8))
    with pytest.raises(ValueError, match="not a DCSHS model"):
        load_model(p)


def test_config_round_trip_and_validation():
    cfg = DcshsConfig(R1=3, nc_grid_maj=(1, 2), ctm=CtmConfig(embed_dim=4), fusion="vote")
    assert DcshsConfig.from_dict(cfg.to_dict()) == cfg
    for kw in (dict(R2=0), dict(fusion="max"), dict(nc_grid_min=()), dict(C=0)):
        with pytest.raises(ValueError):
            DcshsConfig(**kw)
