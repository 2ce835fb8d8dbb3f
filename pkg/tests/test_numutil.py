import numpy as np
import pytest

from nmflow.numutil import (
    adaptive_simpson,
    bisect_root,
    bracket_roots,
    chunk_indices,
    fibonacci_sphere,
    parallel_map,
    thread_count,
)


def test_bisect_root_polynomial():
    root = bisect_root(lambda x: x ** 3 - 2.0, 0.0, 2.0, tol=1e-12)
    assert root == pytest.approx(2.0 ** (1.0 / 3.0), abs=1e-11)
    with pytest.raises(ValueError):
        bisect_root(lambda x: x * x + 1.0, -1.0, 1.0)


def test_bracket_roots_sine():
    brackets = bracket_roots(np.sin, 0.5, 10.0, step=0.1)
    roots = [bisect_root(np.sin, a, b, tol=1e-10) for a, b in brackets]
    np.testing.assert_allclose(roots, [np.pi, 2 * np.pi, 3 * np.pi], atol=1e-9)


def test_adaptive_simpson_known_integrals():
    assert adaptive_simpson(np.exp, 0.0, 1.0, tol=1e-12) == pytest.approx(np.e - 1.0, abs=1e-11)
    assert adaptive_simpson(lambda x: np.cos(7 * x), 0.0, 2.0, tol=1e-12) == pytest.approx(
        np.sin(14.0) / 7.0, abs=1e-10)
    assert adaptive_simpson(lambda x: x, 3.0, 3.0) == 0.0
    # Orientation: reversed limits flip the sign.
    assert adaptive_simpson(np.exp, 1.0, 0.0, tol=1e-12) == pytest.approx(1.0 - np.e, abs=1e-11)


def test_fibonacci_sphere_unit_norm_and_spread():
    pts = fibonacci_sphere(512)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    # Rough isotropy: the mean should sit near the origin.
    assert np.linalg.norm(pts.mean(axis=0)) < 0.01


def test_thread_count_env_cap(monkeypatch):
    monkeypatch.setenv("NMFLOW_THREADS", "1")
    assert thread_count() == 1
    monkeypatch.setenv("NMFLOW_THREADS", "not-a-number")
    assert thread_count() >= 1


def test_parallel_map_preserves_order():
    items = list(range(37))
    assert parallel_map(lambda x: x * x, items, workers=4) == [x * x for x in items]
    assert parallel_map(lambda x: -x, [], workers=4) == []


def test_chunk_indices_cover():
    pieces = list(chunk_indices(10, 3))
    assert pieces == [(0, 3), (3, 6), (6, 9), (9, 10)]
