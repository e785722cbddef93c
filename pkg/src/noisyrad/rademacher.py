"""Empirical Rademacher complexity of a finite function table.

``F[C, i]`` holds ``f_C(x_i)``. The complexity is
``E_sigma max_C |sum_i sigma_i F[C, i]| / m`` with the absolute value inside
the maximum; ``absolute=False`` drops it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ResourceCapError

EXACT_MAX_M = 20
_CHUNK = 1 << 22


@dataclass(frozen=True)
class RademacherEstimate:
    value: float
    method: str
    m: int
    class_size: int
    mc_samples: int = 0
    std_error: float = 0.0
    seed: int | None = None
    surrogate: bool = False  # sup taken over a finite sample of a larger class


def _check_table(f, m) -> np.ndarray:
    f = np.atleast_2d(np.asarray(f, dtype=float))
    if f.shape[0] == 0:
        raise ParameterError("function table has no rows")
    if m is None:
        m = f.shape[1]
    if f.shape[1] != m or m < 1:
        raise ParameterError(f"table has {f.shape[1]} columns but m={m}")
    return f


def sign_vectors(m: int) -> np.ndarray:
    """All ``2**m`` sign vectors, shape (2^m, m)."""
    return np.array(list(itertools.product((1.0, -1.0), repeat=m)))


def _sup(signs: np.ndarray, f: np.ndarray, absolute: bool) -> np.ndarray:
    s = signs @ f.T
    return (np.abs(s) if absolute else s).max(axis=1)


def rademacher_exact(f, m: int | None = None, absolute: bool = True) -> RademacherEstimate:
    """Average over every sign vector; deterministic, ``m <= 20``."""
    f = _check_table(f, m)
    m, rows = f.shape[1], f.shape[0]
    if m > EXACT_MAX_M:
        raise ResourceCapError(f"exact enumeration limited to m <= {EXACT_MAX_M}; use rademacher_mc")
    # duplicate functions cannot change the max
    f = np.unique(f, axis=0)
    total = 0.0
    # enumerate sign vectors in blocks to bound memory at large classes
    block = max(1, _CHUNK // max(1, f.shape[0]))
    low_bits = min(m, max(0, int(np.log2(block))))
    low = sign_vectors(low_bits) if low_bits else np.zeros((1, 0))
    for high in itertools.product((1.0, -1.0), repeat=m - low_bits):
        signs = np.hstack([np.broadcast_to(high, (low.shape[0], len(high))), low])
        total += _sup(signs, f, absolute).sum()
    value = total / 2**m / m
    return RademacherEstimate(float(value), "exact", m, rows)


def rademacher_mc(
    f, m: int | None = None, n_samples: int = 1000, seed: int = 0, absolute: bool = True
) -> RademacherEstimate:
    """Monte Carlo over ``n_samples`` seeded sign vectors."""
    f = _check_table(f, m)
    m = f.shape[1]
    if n_samples < 100:
        raise ParameterError("n_samples must be >= 100")
    rows = f.shape[0]
    rng = np.random.default_rng(seed)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(n_samples, m))
    f = np.unique(f, axis=0)
    vals = np.concatenate(
        [_sup(signs[i : i + 4096], f, absolute) for i in range(0, n_samples, 4096)]
    ) / m
    return RademacherEstimate(
        float(vals.mean()),
        "monte-carlo",
        m,
        rows,
        mc_samples=n_samples,
        std_error=float(vals.std(ddof=1) / np.sqrt(n_samples)),
        seed=seed,
    )
