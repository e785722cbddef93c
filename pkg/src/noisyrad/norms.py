"""The (p, q) group norm of transfer matrices and the bounds built on it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .channels import MixedUnitaryChannel, depolarizing
from .errors import ParameterError
from .pauli import RepVector, TransferMatrix, compose, tensor, transfer_matrix

SATURATION_SAMPLES = 200


def group_norm(m: TransferMatrix, p: float = 1.0, q: float = math.inf) -> float:
    """``((1/N) sum_i ||M_i||_p^q)^(1/q)`` over the rows ``M_i`` of ``m``.

    At ``q = inf`` this is the largest row ``p``-norm; the ``1/N`` prefactor
    disappears in that limit.
    """
    if not p > 0 or not q > 0:
        raise ParameterError(f"group norm needs p, q > 0, got p={p}, q={q}")
    a = np.abs(m.matrix)
    if math.isinf(p):
        rows = a.max(axis=1)
    else:
        rows = (a**p).sum(axis=1) ** (1.0 / p)
    if math.isinf(q):
        return float(rows.max())
    return float(np.mean(rows**q) ** (1.0 / q))


def one_inf_norm(m: TransferMatrix) -> float:
    return float(np.abs(m.matrix).sum(axis=1).max())


@dataclass(frozen=True)
class ResourceVector:
    """Per-slot resource bounds ``mu[j][i]`` for slot ``i`` of layer ``j``."""

    mu: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if any(v < 0 for layer in self.mu for v in layer):
            raise ParameterError("resource values must be nonnegative")

    @property
    def product(self) -> float:
        return float(np.prod([v for layer in self.mu for v in layer]))

    def flat(self) -> list[float]:
        return [v for layer in self.mu for v in layer]


def noisy_mu(mu: float, epsilon: float, saturated: bool) -> float:
    """Resource bound of a slot after local depolarizing noise of strength ``epsilon``."""
    if mu < 1 - 1e-12:
        raise ParameterError(f"mu must be >= 1 for trace-preserving channels, got {mu}")
    if not 0 <= epsilon <= 0.25:
        raise ParameterError(f"epsilon must lie in [0, 1/4], got {epsilon}")
    if epsilon == 0:
        return mu
    return (1 - 4 * epsilon) * mu if saturated else 1.0


def noisy_ptm(m: TransferMatrix, epsilon: float) -> TransferMatrix:
    """PTM of ``(D_eps tensor ... tensor D_eps) o Phi``."""
    d = depolarizing(epsilon).ptm()
    layer = d
    for _ in range(m.n_out - 1):
        layer = tensor(layer, d)
    return compose(layer, m)


def random_mixed_unitary(n: int, rng: np.random.Generator, max_terms: int = 4) -> MixedUnitaryChannel:
    k = int(rng.integers(1, max_terms + 1))
    us = [unitary_group.rvs(2**n, random_state=rng) for _ in range(k)]
    p = rng.dirichlet(np.ones(k + 1))[:k]
    return MixedUnitaryChannel(us, p, n, label="random")


def saturation_surrogate(
    mu: float,
    epsilon: float,
    n: int,
    candidates: Sequence[TransferMatrix] = (),
    n_samples: int = SATURATION_SAMPLES,
    seed: int = 0,
) -> bool:
    """Sampled stand-in for ``max_{||M||<=mu} ||M^{Phi_eps}||_{1,inf} > 1``.

    Explicit ``candidates`` (for example a slot's finite gate set) are always
    examined; the random mixed-unitary ensemble only adds channels that
    respect the resource bound.
    """
    rng = np.random.default_rng(seed)
    pool = list(candidates)
    for _ in range(n_samples):
        pool.append(transfer_matrix(random_mixed_unitary(n, rng)))
    for m in pool:
        if one_inf_norm(m) <= mu + 1e-12 and one_inf_norm(noisy_ptm(m, epsilon)) > 1 + 1e-12:
            return True
    return False


def corollary_bound(
    mu_eps: ResourceVector, n0: int, m: int, alpha: RepVector, f_i: Sequence[RepVector]
) -> float:
    """``prod mu_ij(eps) * sqrt(8 n0 / m) * ||alpha||_1 * max_i ||f_I(x_i)||_inf``."""
    if m < 1 or len(f_i) == 0:
        raise ParameterError("need at least one sample")
    if len(f_i) != m:
        raise ParameterError(f"m={m} but {len(f_i)} sample encodings")
    if n0 < 1:
        raise ParameterError(f"n0 must be >= 1, got {n0}")
    f_max = max(float(np.abs(f.entries).max()) for f in f_i)
    return mu_eps.product * math.sqrt(8 * n0 / m) * float(np.abs(alpha.entries).sum()) * f_max
