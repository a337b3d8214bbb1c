import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dcshs.data import (MAJORITY, MINORITY, DatasetError, LabeledDataset, MinMaxScaler,
                        load_dataset, parse_csv, parse_keel, to_csv)

MINIMAL = """@relation tiny
@attribute a real [0, 5]
@attribute b integer [0, 9]
@attribute Class {negative, positive}
@data
1.5, 2, negative
0.5, 7, positive
3.0, 1, negative
"""


def write(tmp_path, name, text, newline=None):
    p = tmp_path / name
    with open(p, "w", newline=newline) as fh:
        fh.write(text)
    return p


# --- reference dataset characteristics ------------------------------------

@pytest.mark.parametrize("name, instances, features, ir", [
    ("ionosphere", 351, 32, 1.79),
    ("glass1", 214, 9, 1.82),
    ("abalone19", 4174, 8, 129.4),
])
def test_fixture_summaries_match_reference_values(data_dir, name, instances, features, ir):
    s = parse_keel(data_dir / f"{name}.dat").summary()
    assert (s.instances, s.features) == (instances, features)
    assert round(s.imbalance_ratio, 1 if ir > 100 else 2) == ir


# --- KEEL ----------------------------------------------------------------

def test_minimal_keel_file(tmp_path):
    ds = parse_keel(write(tmp_path, "tiny.dat", MINIMAL))
    assert ds.X.shape == (3, 2)
    np.testing.assert_array_equal(ds.y, [MAJORITY, MINORITY, MAJORITY])
    assert ds.class_names == ("negative", "positive")
    assert ds.feature_names == ("a", "b")
    assert not ds.relabeled


def test_positive_class_larger_is_relabeled(tmp_path):
    text = MINIMAL.replace("3.0, 1, negative", "3.0, 1, positive")
    ds = parse_keel(write(tmp_path, "flip.dat", text))
    assert ds.relabeled
    assert ds.class_names == ("positive", "negative")
    assert ds.imbalance_ratio > 1


def test_nominal_inputs_coded_by_declaration_order(tmp_path):
    text = ("@relation n\n@attribute sex {M, F, I}\n@attribute x real\n"
            "@attribute c {a, b}\n@inputs sex, x\n@outputs c\n@data\n"
            "I, 1.0, a\nM, 2.0, a\nF, 3.0, b\n")
    ds = parse_keel(write(tmp_path, "n.dat", text))
    np.testing.assert_array_equal(ds.X[:, 0], [2, 0, 1])


def test_outputs_may_name_a_non_final_attribute(tmp_path):
    text = ("@relation o\n@attribute c {p, q}\n@attribute x real\n@outputs c\n@data\n"
            "p, 1\nq, 2\np, 3\n")
    ds = parse_keel(write(tmp_path, "o.dat", text))
    np.testing.assert_array_equal(ds.X[:, 0], [1, 2, 3])
    np.testing.assert_array_equal(ds.y, [0, 1, 0])


def test_missing_values_dropped_with_count(tmp_path, caplog):
    text = MINIMAL + "?, 3, negative\n2.0, <null>, positive\n"
    ds = parse_keel(write(tmp_path, "m.dat", text))
    assert ds.n_samples == 3 and ds.dropped_rows == 2
    assert "dropped 2 rows" in caplog.text


@pytest.mark.parametrize("text, message", [
    (MINIMAL.replace("@attribute b integer [0, 9]", "@attribute b string"), "line 3"),
    (MINIMAL.replace("@attribute b integer [0, 9]", "@attrib b real"), "line 3"),
    (MINIMAL.replace("0.5, 7", "0.5, x7"), "line 7: non-numeric"),
    (MINIMAL.replace("3.0, 1, negative", "3.0, negative"), "line 8: expected 3 fields"),
    (MINIMAL.replace("positive\n3.0", "negative\n3.0"), "single class"),
    (MINIMAL.split("@data")[0], "missing @data"),
    (MINIMAL.replace("@data\n", ""), "line 5: unexpected header line"),
])
def test_keel_errors_are_descriptive(tmp_path, text, message):
    with pytest.raises(DatasetError, match=message):
        parse_keel(write(tmp_path, "bad.dat", text))


def test_three_classes_rejected(tmp_path):
    text = MINIMAL.replace("{negative, positive}", "{a, b, c}")
    text = text.replace("negative\n0.5", "a\n0.5").replace("positive", "b").replace(
        "3.0, 1, negative", "3.0, 1, c")
    with pytest.raises(DatasetError, match="exactly 2 classes"):
        parse_keel(write(tmp_path, "three.dat", text))


# --- CSV -----------------------------------------------------------------

def test_csv_label_last(tmp_path):
    ds = parse_csv(write(tmp_path, "d.csv", "x,y,label\n1,2,a\n3,4,b\n5,6,a\n"))
    assert ds.X.shape == (3, 2) and ds.class_names == ("a", "b")


def test_csv_quoted_fields_and_crlf(tmp_path):
    text = '"x","y z","label"\r\n"1.5","2",yes\r\n3,"4","no"\r\n5,6,no\r\n'
    ds = parse_csv(write(tmp_path, "q.csv", text, newline=""))
    assert ds.feature_names == ("x", "y z")
    np.testing.assert_allclose(ds.X, [[1.5, 2], [3, 4], [5, 6]])
    np.testing.assert_array_equal(ds.y, [1, 0, 0])


def test_csv_named_label_column(tmp_path):
    ds = parse_csv(write(tmp_path, "n.csv", "label,x\na,1\nb,2\na,3\n"), label_column="label")
    np.testing.assert_array_equal(ds.X[:, 0], [1, 2, 3])


@pytest.mark.parametrize("text, kw, message", [
    ("x,x,label\n1,2,a\n3,4,b\n", {}, "duplicate header"),
    ("x,label\n1,a\nfoo,b\n", {}, "line 3: non-numeric"),
    ("x,label\n1,a\n2,b\n", {"label_column": "cls"}, "not in header"),
    ("", {}, "empty file"),
])
def test_csv_errors(tmp_path, text, kw, message):
    with pytest.raises(DatasetError, match=message):
        parse_csv(write(tmp_path, "bad.csv", text), **kw)


def test_load_dataset_dispatches_on_suffix(tmp_path):
    assert load_dataset(write(tmp_path, "a.csv", "x,c\n1,p\n2,q\n3,q\n")).n_samples == 3
    assert load_dataset(write(tmp_path, "a.dat", MINIMAL)).n_samples == 3


def test_fixture_round_trips_through_canonical_csv(tmp_path, data_dir):
    ds = parse_keel(data_dir / "glass1.dat")
    back = parse_csv(write(tmp_path, "g.csv", to_csv(ds)))
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.y, ds.y)


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.tuples(st.integers(2, 12), st.integers(1, 4)),
              elements=st.floats(-1e6, 1e6, allow_nan=False)),
       st.data())
def test_csv_round_trip_property(X, data):
    y = np.array(data.draw(st.lists(st.integers(0, 1), min_size=X.shape[0],
                                    max_size=X.shape[0])))
    y[0], y[1] = 0, 1
    if (y == 1).sum() > (y == 0).sum():
        y = 1 - y
    ds = LabeledDataset(X, y, class_names=("neg", "pos"))
    import tempfile, pathlib
    with tempfile.TemporaryDirectory() as d:
        p = pathlib.Path(d) / "r.csv"
        to_csv(ds, p)
        back = parse_csv(p)
    np.testing.assert_array_equal(back.X, ds.X)
    if (y == 1).sum() != (y == 0).sum():
        np.testing.assert_array_equal(back.y, ds.y)


# --- scaling -------------------------------------------------------------

def test_minmax_scaler_maps_training_range_to_unit_interval():
    X = np.array([[1.0, 5.0, 2.0], [3.0, 5.0, 4.0], [2.0, 5.0, 0.0]])
    Z = MinMaxScaler().fit_transform(X)
    np.testing.assert_allclose(Z.min(0), [0, 0, 0])
    np.testing.assert_allclose(Z.max(0), [1, 0, 1])
    with pytest.raises(ValueError, match="expected 3 features"):
        MinMaxScaler().fit(X).transform(X[:, :2])


def test_labeled_dataset_validation():
    with pytest.raises(DatasetError, match="non-finite"):
        LabeledDataset([[np.inf]], [0])
    with pytest.raises(DatasetError, match="label count"):
        LabeledDataset([[1.0], [2.0]], [0])
