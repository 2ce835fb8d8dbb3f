"""Small numeric helpers: bisection, adaptive Simpson quadrature, sphere grids,
and a thread-pool map with deterministic merge order."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np


def bisect_root(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10,
                max_iter: int = 200) -> float:
    """Locate a sign change of f in [a, b] by bisection.

    Requires f(a) and f(b) to have opposite signs (zero endpoints are returned
    directly). Returns the midpoint of the final bracket of width <= tol.
    """
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise ValueError(f"root not bracketed on [{a}, {b}]: f(a)={fa}, f(b)={fb}")
    for _ in range(max_iter):
        if b - a <= tol:
            break
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m
        if fa * fm < 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def bracket_roots(f: Callable[[float], float], a: float, b: float, step: float) -> list[tuple[float, float]]:
    """Scan [a, b] with the given step and return all sign-change brackets."""
    brackets = []
    t0 = a
    f0 = f(t0)
    while t0 < b:
        t1 = min(t0 + step, b)
        f1 = f(t1)
        if f0 == 0.0:
            brackets.append((t0, t0))
        elif f0 * f1 < 0:
            brackets.append((t0, t1))
        t0, f0 = t1, f1
    return brackets


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return (_adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + _adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1))


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-10, max_depth: int = 40) -> float:
    """Adaptive Simpson quadrature of f over [a, b] with absolute tolerance tol."""
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(fa, fm, fb, b - a)
    return _adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, max_depth)


def fibonacci_sphere(n: int) -> np.ndarray:
    """n approximately uniform unit vectors on the 2-sphere (Fibonacci lattice)."""
    i = np.arange(n, dtype=float) + 0.5
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def thread_count() -> int:
    """Worker count for parallel scans; capped by the NMFLOW_THREADS env variable."""
    n = os.cpu_count() or 1
    cap = os.environ.get("NMFLOW_THREADS")
    if cap is not None:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            pass
    return n


def parallel_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """Map fn over items with a thread pool, preserving input order in the result."""
    if workers is None:
        workers = thread_count()
    workers = max(1, min(workers, len(items) or 1))
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def chunk_indices(n: int, chunk: int) -> Iterable[tuple[int, int]]:
    """Yield (start, stop) pairs covering range(n) in chunks."""
    for start in range(0, n, chunk):
        yield start, min(start + chunk, n)
