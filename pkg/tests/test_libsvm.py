import numpy as np
import pytest

from rmtda.errors import DatasetError
from rmtda.libsvm import load_libsvm, write_libsvm
from rmtda.model import TrainingSet


def _write(tmp_path, text):
    path = tmp_path / "data.libsvm"
    path.write_text(text)
    return path


def test_sparse_line(tmp_path):
    path = _write(tmp_path, "1 1:0.5 3:-0.2\n0 2:1\n")
    ds = load_libsvm(path, ("0", "1"), n_features=4)
    np.testing.assert_allclose(ds.data.samples[:, 0], [0.5, 0, -0.2, 0])
    np.testing.assert_allclose(ds.data.samples[:, 1], [0, 1, 0, 0])
    assert list(ds.data.labels) == [1, 0]


def test_label_normalisation_and_skips(tmp_path):
    path = _write(tmp_path, "5.0 1:1\n2 1:2\n7 1:3\n+5 2:1\n")
    ds = load_libsvm(path, (5, 2))
    assert ds.skipped == 1
    assert ds.label_pair == ("5", "2")
    assert list(ds.data.labels) == [0, 1, 0]
    assert ds.data.p == 2


@pytest.mark.parametrize("text,fragment", [
    ("", "no samples"),
    ("1 2:1 2:3\n", "line 1"),
    ("1 1:1\n0 3:1 2:1\n", "line 2"),
    ("1 0:1\n", "1-based"),
    ("1 a:b\n", "bad feature"),
    ("1 4\n", "index:value"),
])
def test_malformed_inputs(tmp_path, text, fragment):
    with pytest.raises(DatasetError, match=fragment):
        load_libsvm(_write(tmp_path, text), ("0", "1"))


def test_n_features_too_small(tmp_path):
    with pytest.raises(DatasetError):
        load_libsvm(_write(tmp_path, "1 5:1\n"), ("0", "1"), n_features=3)


def test_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((6, 9))
    x[rng.random(x.shape) < 0.4] = 0.0
    data = TrainingSet(x, np.array([0, 1] * 4 + [1]))
    path = tmp_path / "rt.libsvm"
    write_libsvm(path, data, ("5", "2"))
    back = load_libsvm(path, ("5", "2"), n_features=6)
    np.testing.assert_array_equal(back.data.samples, x)
    np.testing.assert_array_equal(back.data.labels, data.labels)
