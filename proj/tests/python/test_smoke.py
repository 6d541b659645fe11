"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import gmatrix as gx


def test_generate_and_degrees():
    g = gx.ab_generate(512, m=5, p=0.2, q=0.1, seed=7)
    assert g.n == 512
    assert g.edge_count > 512
    stats = gx.degree_stats(g)
    assert stats["cumulative_in"][0] == pytest.approx(1.0)
    assert stats["mean_total"] == pytest.approx(2.0 * stats["connectivity"])
    # same seed, same graph
    assert g == gx.ab_generate(512, m=5, p=0.2, q=0.1, seed=7)


def test_pagerank_mass_and_floor():
    g = gx.ab_generate(256, seed=3)
    op = gx.GoogleMatrix(g, alpha=0.85)
    pr = gx.pagerank(op, tol=1e-12, seed=5)
    p = pr["p"]
    assert p.sum() == pytest.approx(1.0, abs=1e-10)
    assert p.min() >= (1 - 0.85) / g.n - 1e-15
    assert pr["residual"] < 1e-12
    # operator application preserves mass
    assert op.apply(p).sum() == pytest.approx(1.0, abs=1e-10)


def test_dense_columns_sum_to_one():
    g = gx.ab_generate(64, seed=11)
    dense = gx.GoogleMatrix(g).dense()
    np.testing.assert_allclose(dense.sum(axis=0), np.ones(64), atol=1e-12)


def test_spectrum_roots_of_unity():
    cycle = gx.DirectedGraph(3, [(0, 1), (1, 2), (2, 0)])
    op = gx.GoogleMatrix(cycle, alpha=0.85)
    out = gx.full_spectrum(op)
    lams = sorted(out["eigenvalues"], key=lambda z: -abs(z))
    assert abs(lams[0] - 1.0) < 1e-10
    # the other two are alpha times the complex cube roots of unity
    expected = 0.85 * np.exp(2j * math.pi / 3)
    assert min(abs(lams[1] - expected), abs(lams[1] - expected.conjugate())) < 1e-10


def test_eigenvectors_and_ipr():
    g = gx.ab_generate(128, seed=9)
    op = gx.GoogleMatrix(g)
    out = gx.full_spectrum(op, vectors="window", gamma_lo=0.0, gamma_hi=10.0, seed=2)
    assert out["zero_count"] >= 0
    pairs = [p for p in out["pairs"] if p["verified"]]
    assert pairs
    unit = min(pairs, key=lambda p: abs(p["eigenvalue"] - 1.0))
    assert abs(unit["eigenvalue"] - 1.0) < 1e-8
    xi = gx.ipr(unit["psi"])
    assert 1.0 <= xi <= g.n
    # PageRank and the unit eigenvector agree
    pr = gx.pagerank(op, seed=4)
    psi = np.abs(unit["psi"])
    psi /= psi.sum()
    assert np.abs(psi - pr["p"]).sum() < 1e-6


def test_ipr_basics():
    assert gx.ipr(np.ones(50)) == pytest.approx(50.0)
    e = np.zeros(10)
    e[4] = 2.0
    assert gx.ipr(e) == pytest.approx(1.0)
    assert gx.gamma_of(1.0) == pytest.approx(0.0)
    assert gx.gamma_of(math.exp(-2.0)) == pytest.approx(4.0)


def test_scaling_fit():
    sizes = [2.0**k for k in range(9, 14)]
    out = gx.scaling_fit(sizes, [0.5 * n for n in sizes])
    assert out["mu"] == pytest.approx(1.0, abs=1e-9)


def test_rewire_preserves_degrees():
    g = gx.ab_generate(200, seed=21)
    h, accepted, exhausted = gx.rewire_preserving_degrees(g, seed=3)
    assert accepted > 0
    assert not exhausted
    sg, sh = gx.degree_stats(g), gx.degree_stats(h)
    np.testing.assert_array_equal(sg["in_degrees"], sh["in_degrees"])
    np.testing.assert_array_equal(sg["out_degrees"], sh["out_degrees"])


def test_run_scan(tmp_path):
    import json

    config = {
        "network": {"type": "ab", "m": 4, "p": 0.2, "q": 0.3},
        "sizes": [48, 64, 96],
        "n_realizations": 2,
        "mode": "pagerank_only",
        "seed": 77,
        "output_dir": str(tmp_path / "scan"),
    }
    out = gx.run_scan(json.dumps(config))
    assert out["failures"] == []
    assert (tmp_path / "scan" / "manifest.json").exists()
    assert "summary/summary.json" in out["outputs"]
