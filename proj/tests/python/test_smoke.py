import numpy as np
import pytest

import cnmf


def test_nnls_matches_unconstrained_when_interior():
    rng = np.random.default_rng(0)
    c = rng.random((30, 4))
    h = rng.random((4, 3)) + 0.5
    np.testing.assert_allclose(cnmf.nnls(c, c @ h), h, atol=1e-10)


def test_nnls_clips_negative_direction():
    c = np.eye(2)
    d = np.array([[1.0], [-2.0]])
    np.testing.assert_allclose(cnmf.nnls(c, d), [[1.0], [0.0]])


def test_tsqr_reconstructs():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((200, 6))
    q, r = cnmf.tsqr(a, block_rows=32)
    np.testing.assert_allclose(q @ r, a, atol=1e-12)
    np.testing.assert_allclose(q.T @ q, np.eye(6), atol=1e-12)
    assert np.all(np.diag(r) >= 0)
    np.testing.assert_allclose(np.tril(r, -1), 0.0)


def test_structured_basis_is_orthonormal():
    a = cnmf.gen_nmf(80, 60, 5, delta=0.5, seed=2)
    q = cnmf.structured_basis(a, 5, oversample=5, power=2, seed=3)
    # The sketch is widened to at least 20 columns.
    assert q.shape == (80, 20)
    np.testing.assert_allclose(q.T @ q, np.eye(20), atol=1e-10)


@pytest.mark.parametrize("method", ["mu", "activeset"])
@pytest.mark.parametrize("compression", ["none", "gaussian", "structured"])
def test_nmf_variants(method, compression):
    a = cnmf.gen_nmf(60, 45, 4, delta=0.5, seed=4)
    out = cnmf.nmf(a, 4, method=method, compression=compression, seed=5, max_iter=50)
    assert out["x"].shape == (60, 4) and out["y"].shape == (4, 45)
    assert (out["x"] >= 0).all() and (out["y"] >= 0).all()
    assert out["relative_error"] == pytest.approx(cnmf.relative_error(a, out["x"], out["y"]))
    assert len(out["objective_trace"]) == out["iterations"]


def test_admm_runs():
    a = cnmf.gen_nmf(60, 45, 4, delta=0.5, seed=6)
    out = cnmf.admm(a, 4, seed=7, max_iter=100)
    assert out["relative_error"] < 1.0


@pytest.mark.parametrize("selector", ["spa", "xray"])
@pytest.mark.parametrize("reduction", ["qr", "compressed"])
def test_snmf_recovers_separable_columns(selector, reduction):
    data = cnmf.gen_separable(40, 70, 5, noise=0.0, seed=8)
    out = cnmf.snmf(data["a"], 5, selector=selector, reduction=reduction, seed=9)
    assert sorted(out["k"]) == list(data["k"])
    assert out["rel_error_full"] < 1e-6


def test_threshold_keeps_outliers():
    x = np.zeros((100, 1))
    x[7, 0] = 10.0
    y = np.zeros((1, 20))
    y[0, 3] = 10.0
    tx, ty = cnmf.threshold(x, y)
    assert tx[7, 0] == 10.0 and ty[0, 3] == 10.0


def test_round_trip(tmp_path):
    a = np.arange(12.0).reshape(3, 4)
    for name in ("a.cnmf", "a.csv"):
        cnmf.save(a, tmp_path / name)
        np.testing.assert_array_equal(cnmf.load(tmp_path / name), a)


def test_errors_map_to_python_types():
    a = np.ones((5, 4))
    with pytest.raises(ValueError):
        cnmf.nmf(a, 0)
    with pytest.raises(ValueError):
        cnmf.nmf(a, 3, method="bogus")
    with pytest.raises(cnmf.UndefinedMetricError):
        cnmf.relative_error(np.zeros((3, 3)), np.ones((3, 1)), np.ones((1, 3)))
