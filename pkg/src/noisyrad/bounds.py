"""Numerical checks of the complexity inequalities for noisy circuit classes.

Every check returns a :class:`BoundsReport` phrased as ``lhs <= rhs``; the
margin is ``rhs - lhs`` and the check passes when ``margin >= -tolerance``.
Strict inequalities use a negative tolerance (a required positive margin).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import MixedUnitaryChannel, same_up_to_phase, unitary_channel
from .circuits import (
    CircuitStructure,
    SampleSet,
    class_compatibility,
    enumerate_class,
    fully_noisy_class,
    function_table,
    placement_compatibility,
    resolve_epsilons,
    sample_class,
    unique_ptms,
)
from .errors import ParameterError, PreconditionError
from .lp import gamma_class, l1_recovery_norm
from .norms import (
    ResourceVector,
    corollary_bound,
    noisy_mu,
    one_inf_norm,
    saturation_surrogate,
)
from .pauli import RepVector, unitary_ptm
from .rademacher import RademacherEstimate, rademacher_exact, rademacher_mc

EXACT_TOL = 1e-9
LP_TOL = 1e-8
CSV_COLUMNS = (
    "inequality_id", "lhs", "rhs", "margin", "pass", "m", "k", "epsilon", "seed", "class_size", "method",
)


@dataclass(frozen=True)
class Estimator:
    method: str = "exact"  # "exact" | "mc"
    n_samples: int = 2000
    seed: int = 0
    class_draws: int = 500  # draws for classes with parameterized slots

    def __post_init__(self):
        if self.method not in ("exact", "mc"):
            raise ParameterError(f"estimator method must be 'exact' or 'mc', got {self.method!r}")


EXACT = Estimator()


@dataclass
class BoundsReport:
    inequality_id: str
    lhs: float
    rhs: float
    tolerance: float = EXACT_TOL
    parameters: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tolerance

    def to_dict(self) -> dict:
        return {
            "inequality_id": self.inequality_id,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "pass": self.passed,
            "tolerance": self.tolerance,
            "parameters": self.parameters,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=_json_default)

    def csv_row(self) -> list:
        p = self.parameters
        eps = p.get("epsilon")
        return [
            self.inequality_id, repr(self.lhs), repr(self.rhs), repr(self.margin), str(self.passed).lower(),
            p.get("m", ""), p.get("k", ""), json.dumps(eps) if eps is not None else "",
            p.get("seed", ""), p.get("class_size", ""), p.get("method", ""),
        ]


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# --- class complexities -------------------------------------------------------------


def _instances(structure: CircuitStructure, k: int, noise, est: Estimator):
    if structure.finite:
        return list(enumerate_class(structure, k, noise)), False
    return sample_class(structure, k, noise, est.class_draws, est.seed), True


def _estimate(table: np.ndarray, est: Estimator, surrogate: bool) -> RademacherEstimate:
    if est.method == "exact":
        r = rademacher_exact(table)
    else:
        r = rademacher_mc(table, n_samples=est.n_samples, seed=est.seed)
    if surrogate:
        r = RademacherEstimate(**{**r.__dict__, "surrogate": True})
    return r


def class_complexity(
    structure: CircuitStructure, k: int, noise, samples: SampleSet, obs: RepVector, est: Estimator = EXACT
) -> tuple[RademacherEstimate, int]:
    """Complexity of the ``k``-noise class and the number of circuits examined."""
    insts, surrogate = _instances(structure, k, noise, est)
    return _estimate(function_table(insts, samples, obs), est, surrogate), len(insts)


def _tolerance(est: Estimator, *terms: tuple[float, RademacherEstimate]) -> float:
    if est.method == "exact":
        return EXACT_TOL
    return 4.0 * math.sqrt(sum((c * r.std_error) ** 2 for c, r in terms))


def _noise_params(noise: MixedUnitaryChannel) -> dict:
    return {"noise": noise.label, "epsilon": noise.epsilon, "total_error": noise.total_error}


def _require_compatible(structure: CircuitStructure, noise: MixedUnitaryChannel):
    w = class_compatibility(structure, noise)
    if not w:
        raise PreconditionError(f"noise {noise.label!r} is not compatible with the class: {w.reason}", w)
    return w


def _pair(structure, noise, k, samples, obs, est):
    if k < 0:
        raise ParameterError("k must be >= 0")
    _require_compatible(structure, noise)
    r_k, n_k = class_complexity(structure, k, noise, samples, obs, est)
    r_k1, n_k1 = class_complexity(structure, k + 1, noise, samples, obs, est)
    return r_k, r_k1, n_k, n_k1


def _base_params(structure, samples, k, est, r_k, r_k1, n_k, n_k1) -> dict:
    return {
        "m": samples.m,
        "k": k,
        "seed": est.seed,
        "class_size": n_k1,
        "class_size_k": n_k,
        "method": r_k.method,
        "r_k": r_k.value,
        "r_k1": r_k1.value,
        "encoding": samples.scheme,
        "surrogate": r_k.surrogate,
    }


def _provenance(structure, samples) -> dict:
    return {"structure": structure.to_dict(), "inputs": [list(np.atleast_1d(x)) for x in samples.inputs]}


def check_prop1(structure, noise, k, samples, obs, est: Estimator = EXACT) -> BoundsReport:
    """``R(k+1) <= R(k)`` for compatible noise."""
    r_k, r_k1, n_k, n_k1 = _pair(structure, noise, k, samples, obs, est)
    params = _base_params(structure, samples, k, est, r_k, r_k1, n_k, n_k1) | _noise_params(noise)
    return BoundsReport(
        "prop1", r_k1.value, r_k.value, _tolerance(est, (1, r_k), (1, r_k1)), params, _provenance(structure, samples)
    )


def _lower(ident, factor, structure, noise, k, samples, obs, est, extra=None) -> BoundsReport:
    r_k, r_k1, n_k, n_k1 = _pair(structure, noise, k, samples, obs, est)
    params = _base_params(structure, samples, k, est, r_k, r_k1, n_k, n_k1) | _noise_params(noise)
    params["factor"] = factor
    params.update(extra or {})
    return BoundsReport(
        ident,
        factor * r_k.value,
        r_k1.value,
        _tolerance(est, (factor, r_k), (1, r_k1)),
        params,
        _provenance(structure, samples),
    )


def check_prop3(structure, noise, k, samples, obs, est: Estimator = EXACT) -> BoundsReport:
    """``R(k+1) >= (1 - 2 sum p_j) R(k)``."""
    return _lower("prop3", noise.prop3_factor, structure, noise, k, samples, obs, est, {"gentle": noise.gentle})


def check_thm4(structure, noise, k, samples, obs, gamma: float, est: Estimator = EXACT) -> BoundsReport:
    """``R(k+1) >= R(k) / (1 + 2 gamma)`` for a free robustness ``gamma``."""
    if not gamma >= 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma}")
    return _lower("thm4", 1.0 / (1.0 + 2.0 * gamma), structure, noise, k, samples, obs, est, {"gamma": gamma})


def check_prop6(structure, noise, k, samples, obs, l1: float, est: Estimator = EXACT) -> BoundsReport:
    """``R(k+1) >= R(k) / ||v(E_R)||_1``."""
    if not l1 >= 1 - 1e-12:
        raise ParameterError(f"recovery l1 norm must be >= 1, got {l1}")
    return _lower("prop6", 1.0 / l1, structure, noise, k, samples, obs, est, {"l1": l1})


# --- robustness quantities for a class -------------------------------------------------

AUTO_SIMPLEX_COLUMNS = 400


def class_gamma(structure: CircuitStructure, noise, k: int, method: str = "auto"):
    """``gamma_{k,k+1}`` of a finite class, over distinct transfer matrices."""
    ck = unique_ptms(enumerate_class(structure, k, noise))
    ck1 = unique_ptms(enumerate_class(structure, k + 1, noise))
    if method == "auto":
        method = "simplex" if 2 * len(ck1) <= AUTO_SIMPLEX_COLUMNS else "highs"
    result = gamma_class(ck, ck1, method)
    result.method = method
    return result


def compatible_unitaries(structure: CircuitStructure) -> list[np.ndarray]:
    """Single-qubit slot gates that may be substituted at every noise position."""
    pool: list[np.ndarray] = []
    for _, _, slot in structure.slots():
        if slot.arity == 1 and slot.gates.finite:
            for g in slot.gates.gates:
                if not any(same_up_to_phase(g, h) for h in pool):
                    pool.append(g)
    return [
        u for u in pool
        if all(placement_compatibility(structure, p, unitary_channel(u)) for p in structure.noise_positions)
    ]


def class_l1(structure: CircuitStructure, noise, method: str = "simplex") -> float:
    gates = compatible_unitaries(structure)
    if not gates:
        return math.inf
    return l1_recovery_norm(noise, gates, method)


def check_prop5(structure, noise, k, gamma: float | None = None, l1: float | None = None) -> BoundsReport:
    """``gamma_{k,k+1} <= (||v(E_R)||_1 - 1) / 2``."""
    if gamma is None:
        gamma = class_gamma(structure, noise, k).gamma
    if l1 is None:
        l1 = class_l1(structure, noise)
    params = {"k": k, "gamma": gamma, "l1": l1} | _noise_params(noise)
    return BoundsReport("prop5", gamma, (l1 - 1) / 2, LP_TOL, params, {"structure": structure.to_dict()})


# --- fixed-structure corollaries -------------------------------------------------------


def _fully_noisy(structure, eps, samples, obs, est):
    insts = list(fully_noisy_class(structure, eps))
    return _estimate(function_table(insts, samples, obs), est, False), len(insts)


def check_final_corollary(structure, epsilon, samples, obs, est: Estimator = EXACT) -> BoundsReport:
    """``prod ((1-4e)/(1+2e))^{n_ij} R(noiseless) <= R(noisy)``."""
    eps = resolve_epsilons(structure, epsilon)
    factor = 1.0
    for j, i, slot in structure.slots():
        e = eps[j][i]
        if not 0 <= e < 0.25:
            raise ParameterError(f"slot ({j}, {i}) epsilon {e} outside [0, 1/4)")
        factor *= ((1 - 4 * e) / (1 + 2 * e)) ** slot.arity
    r0, n0 = class_complexity(structure, 0, None, samples, obs, est)
    rn, _ = _fully_noisy(structure, eps, samples, obs, est)
    params = {
        "m": samples.m, "k": sum(s.arity for _, _, s in structure.slots()), "epsilon": eps,
        "seed": est.seed, "class_size": n0, "method": r0.method, "factor": factor,
        "r_noiseless": r0.value, "r_noisy": rn.value, "encoding": samples.scheme,
    }
    return BoundsReport(
        "final_corollary", factor * r0.value, rn.value, _tolerance(est, (factor, r0), (1, rn)),
        params, _provenance(structure, samples),
    )


def resource_vector(structure: CircuitStructure) -> ResourceVector:
    """Largest ``(1, inf)`` norm over each slot's finite gate set."""
    mu = []
    for layer in structure.layers:
        mu.append(tuple(max(one_inf_norm(unitary_ptm(g)) for g in slot.gates.gates) for slot in layer))
    return ResourceVector(tuple(mu))


def noisy_resource_vector(structure: CircuitStructure, epsilon, seed: int = 0) -> ResourceVector:
    eps = resolve_epsilons(structure, epsilon)
    mu = resource_vector(structure).mu
    out = []
    for j, layer in enumerate(structure.layers):
        row = []
        for i, slot in enumerate(layer):
            cands = [unitary_ptm(g) for g in slot.gates.gates]
            sat = saturation_surrogate(mu[j][i], eps[j][i], slot.arity, cands, seed=seed)
            row.append(noisy_mu(mu[j][i], eps[j][i], sat))
        out.append(tuple(row))
    return ResourceVector(tuple(out))


def check_corollary1(structure, epsilon, samples, obs, est: Estimator = EXACT) -> BoundsReport:
    """``R(noisy) <= prod mu_ij(eps) sqrt(8 n0 / m) ||alpha||_1 max_i ||f_I(x_i)||_inf``."""
    eps = resolve_epsilons(structure, epsilon)
    mu_eps = noisy_resource_vector(structure, eps, est.seed)
    bound = corollary_bound(mu_eps, structure.n0, samples.m, obs, samples.encodings)
    rn, n = _fully_noisy(structure, eps, samples, obs, est)
    params = {
        "m": samples.m, "epsilon": eps, "seed": est.seed, "class_size": n, "method": rn.method,
        "mu_eps": mu_eps.flat(), "encoding": samples.scheme,
    }
    tol = EXACT_TOL if est.method == "exact" else 4 * rn.std_error
    return BoundsReport("corollary1", rn.value, bound, tol, params, _provenance(structure, samples))


# --- closed-form comparisons ----------------------------------------------------------


def check_example1_chain(epsilon: float, structure: CircuitStructure, k: int = 0) -> list[BoundsReport]:
    """``(1+2 gamma)^-1 >= ||v||^-1 >= ((1+2e)/(1-4e))^-1 > 1 - 6e`` for depolarizing noise."""
    from .channels import depolarizing

    if not 0 < epsilon < 1 / 6:
        raise ParameterError("the chain is strict only for 0 < epsilon < 1/6")
    noise = depolarizing(epsilon)
    gamma = class_gamma(structure, noise, k).gamma
    l1 = class_l1(structure, noise)
    closed = (1 - 4 * epsilon) / (1 + 2 * epsilon)
    params = {"epsilon": epsilon, "k": k, "gamma": gamma, "l1": l1}
    prov = {"structure": structure.to_dict()}
    return [
        BoundsReport("example1.l1_vs_gamma", 1 / l1, 1 / (1 + 2 * gamma), LP_TOL, dict(params), prov),
        BoundsReport("example1.closed_vs_l1", closed, 1 / l1, LP_TOL, dict(params), prov),
        BoundsReport("example1.prop3_vs_closed", 1 - 6 * epsilon, closed, -1e-6, dict(params), prov),
    ]


def check_example2(epsilon: float, structure: CircuitStructure) -> BoundsReport:
    """Dephasing: the recovery-map factor equals ``1 - 2e``; margin is ``-|difference|``."""
    from .channels import dephasing

    noise = dephasing(epsilon)
    l1 = class_l1(structure, noise)
    diff = abs(1 / l1 - noise.prop3_factor)
    params = {"epsilon": epsilon, "l1": l1, "prop6_factor": 1 / l1, "prop3_factor": noise.prop3_factor}
    return BoundsReport("example2.prop6_eq_prop3", diff, 0.0, EXACT_TOL, params, {"structure": structure.to_dict()})


def check_prop2(channel_ptm, epsilon: float, label: str = "") -> BoundsReport:
    """``||M^{Phi_eps}||_{1,inf} <= max(1, (1-4e) ||M^Phi||_{1,inf})``."""
    from .norms import noisy_ptm

    mu = one_inf_norm(channel_ptm)
    lhs = one_inf_norm(noisy_ptm(channel_ptm, epsilon))
    params = {"epsilon": epsilon, "mu": mu, "channel": label}
    return BoundsReport("prop2", lhs, max(1.0, (1 - 4 * epsilon) * mu), 1e-10, params, {})


def reports_to_csv_rows(reports: Sequence[BoundsReport]) -> list[list]:
    return [list(CSV_COLUMNS)] + [r.csv_row() for r in reports]
