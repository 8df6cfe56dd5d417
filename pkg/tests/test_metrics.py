"""Metrics against hand-built covariance and quantile oracles."""

import csv
import json
import statistics

import numpy as np
import pytest

from dmcd.metrics import (
    MetricsReport,
    mec,
    mse,
    qq_export,
    qq_pairs,
    qq_r_squared,
    sparsity,
)
from dmcd.metrics import _max_eigenvalue


# =====================================================================
# mse
# =====================================================================


def test_mse_trivial_values():
    f = np.arange(16.0).reshape(4, 4)
    assert mse(f, f) == 0.0
    assert mse(f, f + 1.0) == 1.0


def test_mse_matches_direct_sum():
    rng = np.random.default_rng(81)
    a = rng.normal(size=(8, 8))
    b = rng.normal(size=(8, 8))
    total = 0.0
    for i in range(8):
        for j in range(8):
            total += (a[i, j] - b[i, j]) ** 2
    assert np.isclose(mse(a, b), total / 64.0, rtol=1e-14)


def test_mse_symmetry_and_quadratic_scaling():
    rng = np.random.default_rng(82)
    a = rng.normal(size=(6, 6))
    b = rng.normal(size=(6, 6))
    assert mse(a, b) == mse(b, a)
    assert np.isclose(mse(a, a + 3.0 * (b - a)), 9.0 * mse(a, a + (b - a)))


def test_mse_validation():
    with pytest.raises(ValueError):
        mse(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(ValueError):
        mse(np.zeros(4), np.zeros(4))
    bad = np.zeros((4, 4))
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        mse(bad, np.zeros((4, 4)))


# =====================================================================
# mec
# =====================================================================


def test_mec_zero_error_is_zero():
    assert mec(np.zeros((20, 20))) == 0.0


def test_mec_rank_one_analytic():
    # Every tile is c_i * p, so the covariance is s^2 p p^T with maximum
    # eigenvalue s^2 ||p||^2 (s^2 the population variance of the c_i).
    rng = np.random.default_rng(83)
    p = rng.normal(size=(10, 10))
    c = rng.normal(size=6)
    img = np.zeros((30, 20))
    k = 0
    for bi in range(3):
        for bj in range(2):
            img[bi * 10 : (bi + 1) * 10, bj * 10 : (bj + 1) * 10] = c[k] * p
            k += 1
    want = float(np.mean((c - c.mean()) ** 2) * np.sum(p * p))
    assert abs(mec(img) - want) < 1e-8 * want


def test_mec_matches_dense_eigensolver_on_noise():
    rng = np.random.default_rng(84)
    err = rng.normal(scale=3.0, size=(100, 100))
    blocks = []
    for bi in range(10):
        for bj in range(10):
            blocks.append(err[bi * 10 : (bi + 1) * 10, bj * 10 : (bj + 1) * 10].ravel())
    x = np.array(blocks)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / x.shape[0]
    want = float(np.linalg.eigvalsh(cov)[-1])
    assert abs(mec(err) - want) < 1e-8


def test_mec_mean_shift_invariance():
    rng = np.random.default_rng(85)
    err = rng.normal(size=(30, 30))
    base = mec(err)
    assert np.isclose(mec(err + 17.3), base, rtol=1e-9)


def test_mec_drops_partial_blocks():
    rng = np.random.default_rng(86)
    err = rng.normal(size=(25, 27))
    assert np.isclose(mec(err), mec(err[:20, :20]), rtol=1e-12)


def test_mec_validation():
    with pytest.raises(ValueError):
        mec(np.zeros((5, 20)))
    with pytest.raises(ValueError):
        mec(np.zeros((20, 20)), block=0)


def test_max_eigenvalue_closed_form_2x2():
    # Quadratic-formula eigenvalue for [[a, b], [b, c]].
    rng = np.random.default_rng(87)
    for _ in range(20):
        a, b, c = rng.normal(size=3)
        m = np.array([[a, b], [b, c]])
        m = m @ m.T  # PSD
        aa, bb, cc = m[0, 0], m[0, 1], m[1, 1]
        want = (aa + cc) / 2 + np.sqrt(((aa - cc) / 2) ** 2 + bb**2)
        assert abs(_max_eigenvalue(m) - want) < 1e-9 * max(1.0, want)


def test_max_eigenvalue_matches_library_6x6():
    rng = np.random.default_rng(88)
    for _ in range(10):
        b = rng.normal(size=(6, 6))
        m = b.T @ b
        want = float(np.linalg.eigvalsh(m)[-1])
        assert abs(_max_eigenvalue(m) - want) < 1e-8 * max(1.0, want)


# =====================================================================
# sparsity
# =====================================================================


def test_sparsity_trivial_fractions():
    assert sparsity(np.zeros((4, 4))) == 0.0
    assert sparsity(np.ones((4, 4))) == 100.0
    half = np.ones((4, 4))
    half[:2] = 0.0
    assert sparsity(half) == 50.0


def test_sparsity_tolerance_gate():
    v = np.full((2, 2), 1e-13)
    assert sparsity(v) == 0.0
    assert sparsity(v, tol=1e-14) == 100.0
    with pytest.raises(ValueError):
        sparsity(v, tol=-1.0)


# =====================================================================
# quantile pairs
# =====================================================================


def test_qq_theoretical_column_frozen_value():
    # inv normal CDF at 0.9; row 4 of n=5 has probability (4 + 0.5)/5.
    pairs = qq_pairs(np.arange(5.0).reshape(1, 5))
    assert np.isclose(pairs[4, 0], 1.2815515655446004, atol=1e-12)
    assert np.all(np.diff(pairs[:, 0]) > 0)
    assert np.all(np.diff(pairs[:, 1]) >= 0)


def test_qq_standardization():
    rng = np.random.default_rng(89)
    eps = rng.normal(loc=40.0, scale=7.0, size=(20, 20))
    sample = qq_pairs(eps)[:, 1]
    assert abs(sample.mean()) < 1e-12
    assert abs(np.mean(sample**2) - 1.0) < 1e-12


def test_qq_normal_sample_tracks_theory():
    rng = np.random.default_rng(71)
    eps = rng.normal(size=(100, 100))
    pairs = qq_pairs(eps)
    n = len(pairs)
    probs = (np.arange(n) + 0.5) / n
    dist = statistics.NormalDist()
    cdf_gap = np.max(np.abs([dist.cdf(s) - p for s, p in zip(pairs[:, 1], probs)]))
    assert cdf_gap < 0.1, f"distribution gap {cdf_gap:.4f}"
    inner = (probs > 0.01) & (probs < 0.99)
    bulk = np.max(np.abs(pairs[inner, 0] - pairs[inner, 1]))
    assert bulk < 0.1, f"bulk quantile gap {bulk:.4f}"
    assert qq_r_squared(pairs) > 0.99


def test_qq_constant_input_degenerates():
    pairs = qq_pairs(np.full((6, 6), 42.0))
    assert np.all(pairs[:, 1] == 0.0)
    assert qq_r_squared(pairs) == 0.0


def test_qq_symmetric_input_centers_median():
    rng = np.random.default_rng(90)
    half = rng.normal(size=(5, 10))
    eps = np.concatenate([half, -half], axis=0)
    pairs = qq_pairs(eps)
    n = len(pairs)
    mid = pairs[n // 2 - 1 : n // 2 + 1]
    assert abs(mid[:, 0].sum()) < 1e-12
    assert abs(mid[:, 1].sum()) < 1e-12


def test_qq_export_round_trip(tmp_path):
    rng = np.random.default_rng(91)
    eps = rng.normal(size=(8, 8))
    path = qq_export(eps, str(tmp_path / "qq.csv"))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["theoretical", "sample"]
    back = np.array([[float(a), float(b)] for a, b in rows[1:]])
    assert np.array_equal(back, qq_pairs(eps))


def test_qq_r_squared_validation():
    with pytest.raises(ValueError):
        qq_r_squared(np.zeros((3, 3)))


# =====================================================================
# report container
# =====================================================================


def make_report(**overrides):
    base = dict(
        mse=1.25,
        mec=30.5,
        sparsity_percent=12.0,
        err_v_history=np.array([np.inf, -2.0, -6.5]),
        constraint_residual=1e-4,
    )
    base.update(overrides)
    return MetricsReport(**base)


def test_report_validation():
    with pytest.raises(ValueError):
        make_report(mse=-1.0)
    with pytest.raises(ValueError):
        make_report(mec=np.nan)
    with pytest.raises(ValueError):
        make_report(sparsity_percent=101.0)
    with pytest.raises(ValueError):
        make_report(constraint_residual=np.inf)
    make_report()  # sentinel in history is allowed


def test_report_json_sanitizes_sentinels(tmp_path):
    report = make_report()
    path = report.write_json(str(tmp_path / "report.json"))
    with open(path) as fh:
        data = json.load(fh)
    assert data["err_v_history"] == [None, -2.0, -6.5]
    assert data["mse"] == 1.25
    assert data["sparsity_percent"] == 12.0


def test_report_json_deterministic_bytes(tmp_path):
    p1 = make_report().write_json(str(tmp_path / "a.json"))
    p2 = make_report().write_json(str(tmp_path / "b.json"))
    with open(p1, "rb") as f1, open(p2, "rb") as f2:
        assert f1.read() == f2.read()


def test_report_history_csv(tmp_path):
    report = make_report()
    path = report.write_history_csv(str(tmp_path / "hist.csv"))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["iteration", "err_v"]
    assert rows[1] == ["1", "inf"]
    assert rows[3] == ["3", "-6.5"]
