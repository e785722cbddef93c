"""Mixed-unitary noise, recovery quasi-channels and class compatibility."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DimensionError, ParameterError
from .pauli import TransferMatrix, X, Y, Z, num_qubits_for_dim, transfer_matrix

UNITARY_TOL = 1e-12
PHASE_TOL = 1e-9


def _as_unitaries(unitaries) -> tuple[np.ndarray, ...]:
    mats = tuple(np.array(u, dtype=complex) for u in unitaries)
    for u in mats:
        u.setflags(write=False)
    return mats


def _check_unitaries(mats: Sequence[np.ndarray], n: int) -> None:
    d = 2**n
    for u in mats:
        if u.shape != (d, d):
            raise DimensionError(f"unitary of shape {u.shape} on a {n}-qubit channel")
        if np.max(np.abs(u.conj().T @ u - np.eye(d))) >= UNITARY_TOL:
            raise ParameterError("matrix is not unitary within 1e-12")


@dataclass(frozen=True, eq=False)
class MixedUnitaryChannel:
    """``(1 - sum p) rho + sum_i p_i U_i rho U_i^dagger``.

    The identity component is implicit; ``probs`` may sum to less than one.
    """

    unitaries: tuple
    probs: np.ndarray
    n: int
    label: str = "mixed_unitary"
    epsilon: float | None = None

    def __post_init__(self):
        mats = _as_unitaries(self.unitaries)
        p = np.array(self.probs, dtype=float).reshape(-1)
        if len(mats) != len(p):
            raise DimensionError(f"{len(mats)} unitaries but {len(p)} probabilities")
        if np.any(p < 0) or p.sum() > 1 + 1e-12:
            raise ParameterError(f"probabilities must be >= 0 and sum to <= 1, got {p}")
        _check_unitaries(mats, self.n)
        p.setflags(write=False)
        object.__setattr__(self, "unitaries", mats)
        object.__setattr__(self, "probs", p)

    @property
    def total_error(self) -> float:
        return float(self.probs.sum())

    @property
    def gentle(self) -> bool:
        return self.total_error <= 0.5 + 1e-15

    @property
    def prop3_factor(self) -> float:
        """``1 - 2 sum_j p_j``; nonpositive outside the gentle regime."""
        return 1.0 - 2.0 * self.total_error

    def terms(self) -> list[tuple[float, np.ndarray]]:
        eye = np.eye(2**self.n, dtype=complex)
        return [(1.0 - self.total_error, eye)] + list(zip(self.probs.tolist(), self.unitaries))

    def ptm(self) -> TransferMatrix:
        return transfer_matrix(self)

    def __repr__(self):
        return f"MixedUnitaryChannel({self.label}, n={self.n}, probs={self.probs.tolist()})"


@dataclass(frozen=True, eq=False)
class QuasiChannel:
    """``sum_i v_i U_i rho U_i^dagger`` with signed coefficients (identity explicit)."""

    unitaries: tuple
    coeffs: np.ndarray
    n: int
    trace_preserving: bool = True
    label: str = "quasi"

    def __post_init__(self):
        mats = _as_unitaries(self.unitaries)
        v = np.array(self.coeffs, dtype=float).reshape(-1)
        if len(mats) != len(v):
            raise DimensionError(f"{len(mats)} unitaries but {len(v)} coefficients")
        _check_unitaries(mats, self.n)
        if self.trace_preserving and abs(v.sum() - 1.0) > 1e-10:
            raise ParameterError(f"coefficients of a trace-preserving map must sum to 1, got {v.sum()}")
        v.setflags(write=False)
        object.__setattr__(self, "unitaries", mats)
        object.__setattr__(self, "coeffs", v)

    @property
    def l1_weight(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def terms(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.coeffs.tolist(), self.unitaries))

    def ptm(self) -> TransferMatrix:
        return transfer_matrix(self)


def identity_channel(n: int = 1) -> MixedUnitaryChannel:
    return MixedUnitaryChannel((), np.zeros(0), n, label="identity", epsilon=0.0)


def unitary_channel(u: np.ndarray, label: str = "unitary") -> MixedUnitaryChannel:
    """The channel ``U (.) U^dagger`` written as a mixed-unitary channel with p = 1."""
    u = np.asarray(u, dtype=complex)
    return MixedUnitaryChannel((u,), [1.0], num_qubits_for_dim(u.shape[0]), label=label)


def depolarizing(epsilon: float) -> MixedUnitaryChannel:
    """``(1 - 3e) rho + e (X rho X + Y rho Y + Z rho Z)`` for ``0 <= e <= 1/4``."""
    if not 0 <= epsilon <= 0.25:
        raise ParameterError(f"depolarizing epsilon must lie in [0, 1/4], got {epsilon}")
    if epsilon == 0:
        return MixedUnitaryChannel((), np.zeros(0), 1, label="depolarizing", epsilon=0.0)
    return MixedUnitaryChannel((X, Y, Z), [epsilon] * 3, 1, label="depolarizing", epsilon=float(epsilon))


def dephasing(epsilon: float) -> MixedUnitaryChannel:
    """``(1 - e) rho + e Z rho Z`` for ``0 <= e <= 1/2``."""
    if not 0 <= epsilon <= 0.5:
        raise ParameterError(f"dephasing epsilon must lie in [0, 1/2], got {epsilon}")
    if epsilon == 0:
        return MixedUnitaryChannel((), np.zeros(0), 1, label="dephasing", epsilon=0.0)
    return MixedUnitaryChannel((Z,), [epsilon], 1, label="dephasing", epsilon=float(epsilon))


def recovery_depolarizing(epsilon: float) -> QuasiChannel:
    if not 0 <= epsilon < 0.25:
        raise ParameterError(f"depolarizing recovery needs epsilon in [0, 1/4), got {epsilon}")
    s = epsilon / (1 - 4 * epsilon)
    return QuasiChannel(
        (np.eye(2), X, Y, Z), [1 + 3 * s, -s, -s, -s], 1, label="recovery_depolarizing"
    )


def recovery_dephasing(epsilon: float) -> QuasiChannel:
    if not 0 <= epsilon < 0.5:
        raise ParameterError(f"dephasing recovery needs epsilon in [0, 1/2), got {epsilon}")
    d = 1 - 2 * epsilon
    return QuasiChannel(
        (np.eye(2), Z), [(1 - epsilon) / d, -epsilon / d], 1, label="recovery_dephasing"
    )


# --- Clifford group and gate matching -------------------------------------------


def canonical_phase(u: np.ndarray) -> np.ndarray:
    """Multiply by a global phase so the first significant entry is real positive."""
    flat = u.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-9))
    return u * (abs(flat[k]) / flat[k])


def same_up_to_phase(u: np.ndarray, g: np.ndarray) -> bool:
    return abs(abs(np.trace(u.conj().T @ g)) - u.shape[0]) < PHASE_TOL


@lru_cache(maxsize=1)
def clifford_group_1q() -> tuple[np.ndarray, ...]:
    """The 24 single-qubit Cliffords (modulo phase), by closure of ``<H, S>``."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    s = np.array([[1, 0], [0, 1j]], dtype=complex)
    found = [canonical_phase(np.eye(2, dtype=complex))]
    frontier = list(found)
    while frontier:
        nxt = []
        for u in frontier:
            for g in (h, s):
                c = canonical_phase(g @ u)
                if not any(same_up_to_phase(c, f) for f in found):
                    found.append(c)
                    nxt.append(c)
        frontier = nxt
    for u in found:
        u.setflags(write=False)
    return tuple(found)


@dataclass(frozen=True)
class CompatibilityWitness:
    """Each channel unitary matched to a gate-set element: ``(gate index, weight)``."""

    decomposition: tuple[tuple[int, float], ...]
    target: str

    def __bool__(self):
        return True

    def reconstruct(self, gate_set: Sequence[np.ndarray], n: int) -> TransferMatrix:
        ch = MixedUnitaryChannel(
            [gate_set[i] for i, _ in self.decomposition],
            [w for _, w in self.decomposition],
            n,
        )
        return ch.ptm()


@dataclass(frozen=True)
class Incompatible:
    target: str
    reason: str
    unmatched: tuple[int, ...] = field(default_factory=tuple)

    def __bool__(self):
        return False


def is_compatible(channel: MixedUnitaryChannel, gate_set: Sequence[np.ndarray]):
    """Match every unitary of ``channel`` to an element of ``gate_set`` up to phase.

    Returns a :class:`CompatibilityWitness` or an :class:`Incompatible` value.
    Unitaries carrying zero probability are ignored.
    """
    if len(gate_set) == 0:
        raise ParameterError("gate_set must be nonempty")
    decomposition = []
    unmatched = []
    for i, (u, p) in enumerate(zip(channel.unitaries, channel.probs)):
        if p == 0:
            continue
        if u.shape != np.shape(gate_set[0]):
            raise DimensionError("channel and gate set act on different qubit counts")
        idx = next((j for j, g in enumerate(gate_set) if same_up_to_phase(u, np.asarray(g))), None)
        if idx is None:
            unmatched.append(i)
        else:
            decomposition.append((idx, float(p)))
    if unmatched:
        return Incompatible(channel.label, "unitaries not in gate set", tuple(unmatched))
    return CompatibilityWitness(tuple(decomposition), channel.label)


# --- JSON (de)serialization --------------------------------------------------------


def _encode_matrix(u: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(u)]


def _decode_matrix(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.ndim != 3 or a.shape[-1] != 2:
        raise ParameterError("unitaries must be nested lists of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def channel_to_dict(ch) -> dict:
    if isinstance(ch, MixedUnitaryChannel) and ch.label in ("depolarizing", "dephasing"):
        return {"kind": ch.label, "epsilon": ch.epsilon}
    if isinstance(ch, MixedUnitaryChannel):
        return {
            "kind": "mixed_unitary",
            "unitaries": [_encode_matrix(u) for u in ch.unitaries],
            "coeffs": ch.probs.tolist(),
        }
    if isinstance(ch, QuasiChannel):
        return {
            "kind": "quasi",
            "unitaries": [_encode_matrix(u) for u in ch.unitaries],
            "coeffs": ch.coeffs.tolist(),
        }
    raise TypeError(f"cannot serialize {type(ch).__name__}")


def channel_from_dict(doc: dict):
    kind = doc.get("kind")
    if kind == "depolarizing":
        return depolarizing(float(doc["epsilon"]))
    if kind == "dephasing":
        return dephasing(float(doc["epsilon"]))
    if kind in ("mixed_unitary", "quasi"):
        mats = [_decode_matrix(u) for u in doc["unitaries"]]
        if not mats:
            return identity_channel(int(doc.get("n", 1)))
        n = num_qubits_for_dim(mats[0].shape[0])
        if kind == "mixed_unitary":
            return MixedUnitaryChannel(mats, doc["coeffs"], n)
        return QuasiChannel(mats, doc["coeffs"], n)
    raise ParameterError(f"unknown channel kind {kind!r}")


def dumps_channel(ch) -> str:
    return json.dumps(channel_to_dict(ch), sort_keys=True)


def loads_channel(text: str):
    return channel_from_dict(json.loads(text))
