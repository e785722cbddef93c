"""Fixed-structure circuit families, noise placement and the functions they compute.

A :class:`CircuitStructure` is a sequence of layers; each layer holds slots
acting on disjoint qubits, and each slot draws its gate from a named gate set.
Noise sits on wires at layer boundaries: boundary ``b`` is the wire segment
just before layer ``b`` (boundary ``L`` is the output).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .channels import (
    CompatibilityWitness,
    Incompatible,
    MixedUnitaryChannel,
    clifford_group_1q,
    depolarizing,
    is_compatible,
    same_up_to_phase,
)
from .errors import (
    DimensionError,
    ParameterError,
    ResourceCapError,
    UnsupportedEnumeration,
)
from .pauli import (
    X,
    Y,
    Z,
    RepVector,
    TransferMatrix,
    embed_operator,
    pauli_observable,
    pure_state_rep,
    transfer_matrix,
    unitary_ptm,
)

TABLE_CAP = 10**7

_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
_T = np.diag([1, np.exp(1j * np.pi / 4)])


def _rot(angles) -> np.ndarray:
    """``Rz(a) Ry(b) Rz(c)``."""
    a, b, c = angles

    def rz(t):
        return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])

    ry = np.array([[math.cos(b / 2), -math.sin(b / 2)], [math.sin(b / 2), math.cos(b / 2)]])
    return rz(a) @ ry @ rz(c)


@dataclass(frozen=True)
class GateSet:
    name: str
    arity: int
    gates: tuple | None = None  # None marks a parameterized family

    @property
    def finite(self) -> bool:
        return self.gates is not None

    def __len__(self):
        if self.gates is None:
            raise UnsupportedEnumeration(f"gate set {self.name!r} is parameterized")
        return len(self.gates)

    def unitary(self, choice) -> np.ndarray:
        if self.gates is not None:
            return self.gates[choice]
        return _rot(choice)


@lru_cache(maxsize=None)
def gate_set(name: str) -> GateSet:
    if name == "clifford1":
        return GateSet(name, 1, clifford_group_1q())
    if name == "pauli1":
        return GateSet(name, 1, (np.eye(2, dtype=complex), X, Y, Z))
    if name == "identity1":
        return GateSet(name, 1, (np.eye(2, dtype=complex),))
    if name == "clifford_t1":
        return GateSet(name, 1, clifford_group_1q() + (_T,))
    if name == "param_rot":
        return GateSet(name, 1, None)
    if name == "cnot2":
        return GateSet(name, 2, (_CNOT,))
    if name == "entangler2":
        return GateSet(name, 2, (np.eye(4, dtype=complex), _CNOT, _CZ, _SWAP))
    raise ParameterError(f"unknown gate set {name!r}")


GATE_SET_NAMES = ("clifford1", "pauli1", "identity1", "clifford_t1", "param_rot", "cnot2", "entangler2")


@dataclass(frozen=True)
class Slot:
    qubits: tuple[int, ...]
    gate_set: str

    @property
    def arity(self) -> int:
        return len(self.qubits)

    @property
    def gates(self) -> GateSet:
        return gate_set(self.gate_set)


Position = tuple[int, int]


@dataclass(frozen=True)
class CircuitStructure:
    n0: int
    layers: tuple[tuple[Slot, ...], ...]
    noise_positions: tuple[Position, ...] = ()

    def __post_init__(self):
        if self.n0 < 1:
            raise DimensionError("n0 must be >= 1")
        layers = tuple(tuple(layer) for layer in self.layers)
        for j, layer in enumerate(layers):
            used: set[int] = set()
            for slot in layer:
                if any(not 0 <= q < self.n0 for q in slot.qubits):
                    raise DimensionError(f"layer {j}: qubits {slot.qubits} outside 0..{self.n0 - 1}")
                if used & set(slot.qubits) or len(set(slot.qubits)) != slot.arity:
                    raise DimensionError(f"layer {j}: slots overlap on qubits")
                used |= set(slot.qubits)
                if slot.gates.arity != slot.arity:
                    raise DimensionError(
                        f"layer {j}: gate set {slot.gate_set!r} has arity {slot.gates.arity}, "
                        f"slot acts on {slot.arity} qubits"
                    )
        positions = tuple(tuple(p) for p in self.noise_positions) or tuple(
            (b, q) for b in range(len(layers) + 1) for q in range(self.n0)
        )
        for b, q in positions:
            if not (0 <= b <= len(layers) and 0 <= q < self.n0):
                raise DimensionError(f"noise position {(b, q)} outside the circuit")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "noise_positions", positions)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def slots(self) -> list[tuple[int, int, Slot]]:
        return [(j, i, s) for j, layer in enumerate(self.layers) for i, s in enumerate(layer)]

    @property
    def finite(self) -> bool:
        return all(s.gates.finite for _, _, s in self.slots())

    def class_size(self, k: int = 0) -> int:
        size = math.prod(len(s.gates) for _, _, s in self.slots())
        return size * math.comb(len(self.noise_positions) + k - 1, k)

    # JSON document: {"n0", "layers": [slot | [slot, ...]], "noise_positions"}
    def to_dict(self) -> dict:
        layers = []
        for layer in self.layers:
            docs = [{"qubits": list(s.qubits), "gate_set": s.gate_set} for s in layer]
            layers.append(docs[0] if len(docs) == 1 else docs)
        return {"n0": self.n0, "layers": layers, "noise_positions": [list(p) for p in self.noise_positions]}

    @classmethod
    def from_dict(cls, doc: dict) -> CircuitStructure:
        try:
            n0 = int(doc["n0"])
            layers = []
            for entry in doc["layers"]:
                entries = entry if isinstance(entry, list) else [entry]
                layers.append(tuple(Slot(tuple(int(q) for q in e["qubits"]), str(e["gate_set"])) for e in entries))
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"malformed structure document: {exc}") from exc
        positions = tuple(tuple(int(v) for v in p) for p in doc.get("noise_positions") or ())
        return cls(n0, tuple(layers), positions)


def single_slot(gate_set_name: str = "clifford1") -> CircuitStructure:
    return CircuitStructure(1, ((Slot((0,), gate_set_name),),))


def two_layer(gate_set_name: str = "clifford1") -> CircuitStructure:
    """Two sequential single-qubit slots on one wire."""
    return CircuitStructure(1, ((Slot((0,), gate_set_name),), (Slot((0,), gate_set_name),)))


def parallel_pair(gate_set_name: str = "clifford1") -> CircuitStructure:
    """One layer with two single-qubit slots on two wires."""
    return CircuitStructure(2, ((Slot((0,), gate_set_name), Slot((1,), gate_set_name)),))


# --- embedded operators ---------------------------------------------------------


@lru_cache(maxsize=None)
def _slot_ptms(structure: CircuitStructure, layer: int, index: int) -> np.ndarray:
    slot = structure.layers[layer][index]
    return np.stack(
        [
            unitary_ptm(embed_operator(g, slot.qubits, structure.n0)).matrix
            for g in slot.gates.gates
        ]
    )


def slot_ptm(structure: CircuitStructure, layer: int, index: int, choice) -> np.ndarray:
    slot = structure.layers[layer][index]
    if slot.gates.finite:
        return _slot_ptms(structure, layer, index)[choice]
    return unitary_ptm(embed_operator(slot.gates.unitary(choice), slot.qubits, structure.n0)).matrix


_NOISE_CACHE: dict = {}


def noise_ptm(channel: MixedUnitaryChannel, qubit: int, n: int) -> np.ndarray:
    if channel.n != 1:
        raise DimensionError("noise placements carry single-qubit channels")
    key = (id(channel), qubit, n)
    hit = _NOISE_CACHE.get(key)
    if hit is not None and hit[0] is channel:
        return hit[1]
    m = channel.ptm().matrix
    full = np.kron(np.kron(np.eye(4**qubit), m), np.eye(4 ** (n - qubit - 1)))
    full.setflags(write=False)
    _NOISE_CACHE[key] = (channel, full)
    return full


# --- instances ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CircuitInstance:
    """One circuit: a gate choice per slot plus ``k`` noise placements.

    ``gates`` follows :meth:`CircuitStructure.slots` order; a choice is an
    index into a finite gate set or an angle triple for ``param_rot``.
    ``placements`` is a tuple of ``((boundary, qubit), channel)``.
    """

    structure: CircuitStructure
    gates: tuple
    placements: tuple = ()

    @property
    def k(self) -> int:
        return len(self.placements)

    def with_placement(self, position: Position, channel: MixedUnitaryChannel) -> CircuitInstance:
        return CircuitInstance(self.structure, self.gates, self.placements + ((tuple(position), channel),))

    def without_placement(self, index: int) -> CircuitInstance:
        p = self.placements
        return CircuitInstance(self.structure, self.gates, p[:index] + p[index + 1 :])

    def ptm_matrix(self) -> np.ndarray:
        st = self.structure
        n = st.n0
        m = np.eye(4**n)
        by_boundary: dict[int, list] = {}
        for (b, q), ch in self.placements:
            by_boundary.setdefault(b, []).append((q, ch))
        g = 0
        for b in range(st.depth + 1):
            for q, ch in by_boundary.get(b, ()):
                m = noise_ptm(ch, q, n) @ m
            if b < st.depth:
                for i in range(len(st.layers[b])):
                    m = slot_ptm(st, b, i, self.gates[g]) @ m
                    g += 1
        return m

    def ptm(self) -> TransferMatrix:
        return TransferMatrix(self.structure.n0, self.structure.n0, self.ptm_matrix())

    def key(self) -> tuple:
        return (
            tuple(g if isinstance(g, int) else tuple(g) for g in self.gates),
            tuple((p, ch.label, ch.total_error) for p, ch in self.placements),
        )


def _gate_choices(structure: CircuitStructure) -> Iterator[tuple]:
    sizes = []
    for _, _, slot in structure.slots():
        if not slot.gates.finite:
            raise UnsupportedEnumeration(
                f"slot with gate set {slot.gate_set!r} is parameterized; use sample_class"
            )
        sizes.append(range(len(slot.gates)))
    return itertools.product(*sizes)


def enumerate_class(
    structure: CircuitStructure, k: int = 0, noise: MixedUnitaryChannel | None = None
) -> Iterator[CircuitInstance]:
    """Every gate assignment times every multiset of ``k`` noise positions."""
    if k < 0:
        raise ParameterError("k must be >= 0")
    if k > 0 and noise is None:
        raise ParameterError("k > 0 requires a noise channel")
    choices = list(_gate_choices(structure))
    multisets = list(itertools.combinations_with_replacement(structure.noise_positions, k))
    for gates in choices:
        for ms in multisets:
            yield CircuitInstance(structure, tuple(gates), tuple((p, noise) for p in ms))


def sample_class(
    structure: CircuitStructure,
    k: int,
    noise: MixedUnitaryChannel | None,
    n_draws: int,
    seed: int,
) -> list[CircuitInstance]:
    """Seeded draws from a class that may contain parameterized slots."""
    rng = np.random.default_rng(seed)
    out = []
    positions = structure.noise_positions
    for _ in range(n_draws):
        gates = []
        for _, _, slot in structure.slots():
            if slot.gates.finite:
                gates.append(int(rng.integers(len(slot.gates))))
            else:
                gates.append(tuple(float(v) for v in rng.uniform(0, 2 * np.pi, size=3)))
        chosen = sorted(tuple(positions[i]) for i in rng.integers(len(positions), size=k))
        out.append(CircuitInstance(structure, tuple(gates), tuple((p, noise) for p in chosen)))
    return out


def resolve_epsilons(structure: CircuitStructure, epsilon) -> list[list[float]]:
    """Broadcast a scalar or per-slot nested list to ``eps[layer][slot]``."""
    if np.isscalar(epsilon):
        return [[float(epsilon)] * len(layer) for layer in structure.layers]
    eps = [[float(v) for v in (row if isinstance(row, (list, tuple)) else [row])] for row in epsilon]
    if [len(r) for r in eps] != [len(layer) for layer in structure.layers]:
        raise ParameterError("per-slot epsilon does not match the structure's slots")
    return eps


def fully_noisy_class(structure: CircuitStructure, epsilon) -> Iterator[CircuitInstance]:
    """Each slot followed by depolarizing noise on all of its output wires."""
    eps = resolve_epsilons(structure, epsilon)
    placements = []
    for j, i, slot in structure.slots():
        ch = depolarizing(eps[j][i])
        placements.extend(((j + 1, q), ch) for q in slot.qubits)
    for gates in _gate_choices(structure):
        yield CircuitInstance(structure, tuple(gates), tuple(placements))


# --- inputs, observables, function tables ---------------------------------------


@dataclass(frozen=True, eq=False)
class SampleSet:
    encodings: tuple[RepVector, ...]
    inputs: tuple
    scheme: str

    @property
    def m(self) -> int:
        return len(self.encodings)

    def matrix(self) -> np.ndarray:
        """Encodings as columns, shape (4^n, m)."""
        return np.stack([e.entries for e in self.encodings], axis=1)


ENCODINGS = ("angle", "basis")


def encode(x, scheme: str, n0: int) -> RepVector:
    """Representation vector of the input state ``|psi(x)><psi(x)|``.

    ``angle``: ``prod_j (cos(x_j/2)|0> + sin(x_j/2)|1>)``. ``basis``: the
    computational basis state given by an integer or a bit vector, qubit 0
    most significant.
    """
    if scheme == "angle":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (n0,):
            raise DimensionError(f"angle encoding needs {n0} angles, got {x.shape}")
        psi = np.array([1.0 + 0j])
        for t in x:
            psi = np.kron(psi, [math.cos(t / 2), math.sin(t / 2)])
        return pure_state_rep(psi)
    if scheme == "basis":
        if np.isscalar(x):
            idx = int(x)
        else:
            bits = [int(b) for b in x]
            if len(bits) != n0 or any(b not in (0, 1) for b in bits):
                raise DimensionError(f"basis encoding needs {n0} bits, got {bits}")
            idx = int("".join(map(str, bits)), 2)
        if not 0 <= idx < 2**n0:
            raise DimensionError(f"basis index {idx} out of range for {n0} qubits")
        psi = np.zeros(2**n0, dtype=complex)
        psi[idx] = 1
        return pure_state_rep(psi)
    raise ParameterError(f"unknown encoding scheme {scheme!r}")


def make_samples(m: int, scheme: str, n0: int, seed: int) -> SampleSet:
    rng = np.random.default_rng(seed)
    if scheme == "angle":
        inputs = [tuple(float(v) for v in rng.uniform(0, 2 * np.pi, size=n0)) for _ in range(m)]
    elif scheme == "basis":
        inputs = [int(v) for v in rng.integers(0, 2**n0, size=m)]
    else:
        raise ParameterError(f"unknown encoding scheme {scheme!r}")
    return samples_from_inputs(inputs, scheme, n0)


def samples_from_inputs(inputs: Sequence, scheme: str, n0: int) -> SampleSet:
    return SampleSet(tuple(encode(x, scheme, n0) for x in inputs), tuple(inputs), scheme)


def default_observable(n0: int) -> RepVector:
    """``Z`` on qubit 0, identity elsewhere."""
    return pauli_observable("Z" + "I" * (n0 - 1))


def evaluate_f(instance: CircuitInstance, state: RepVector, obs: RepVector) -> float:
    n = instance.structure.n0
    if state.n != n or obs.n != n:
        raise DimensionError(f"circuit on {n} qubits, state on {state.n}, observable on {obs.n}")
    return float(2**n * obs.entries @ instance.ptm_matrix() @ state.entries)


def function_table(
    instances: Iterable[CircuitInstance], samples: SampleSet, obs: RepVector, cap: int = TABLE_CAP
) -> np.ndarray:
    """``F[C, i] = f_C(x_i)`` for every instance of the class."""
    s = samples.matrix()
    n = obs.n
    if s.shape[0] != 4**n:
        raise DimensionError("samples and observable act on different qubit counts")
    weight = 2**n * obs.entries
    rows = []
    for inst in instances:
        if (len(rows) + 1) * samples.m > cap:
            raise ResourceCapError(f"function table exceeds {cap} entries")
        rows.append(weight @ inst.ptm_matrix() @ s)
    if not rows:
        return np.zeros((0, samples.m))
    return np.array(rows)


def unique_ptms(instances: Iterable[CircuitInstance], decimals: int = 10) -> np.ndarray:
    """Distinct PTMs of a class, flattened, in first-seen order."""
    seen: dict[bytes, np.ndarray] = {}
    for inst in instances:
        m = inst.ptm_matrix()
        key = (np.round(m, decimals) + 0.0).tobytes()  # + 0.0 folds -0.0 into 0.0
        if key not in seen:
            seen[key] = m
    return np.array(list(seen.values()))


# --- compatibility --------------------------------------------------------------


def _adjacent_slots(structure: CircuitStructure, position: Position):
    b, q = position
    out = []
    if b >= 1:
        for slot in structure.layers[b - 1]:
            if q in slot.qubits:
                out.append(("after", slot))
    if b < structure.depth:
        for slot in structure.layers[b]:
            if q in slot.qubits:
                out.append(("before", slot))
    return out


def _closed_under(gates: Sequence[np.ndarray], u: np.ndarray, side: str) -> bool:
    for g in gates:
        prod = u @ g if side == "after" else g @ u
        if not any(same_up_to_phase(prod, h) for h in gates):
            return False
    return True


def placement_compatibility(structure: CircuitStructure, position: Position, channel: MixedUnitaryChannel):
    """Can each unitary of ``channel`` at ``position`` be absorbed into a slot?

    Substituting ``U_i`` for the noise keeps the circuit in the class when an
    adjacent slot's gate set contains ``U_i`` (embedded on that wire) and is
    closed under multiplication by it on the side of the wire.
    """
    label = f"{channel.label}@{tuple(position)}"
    if channel.n != 1:
        return Incompatible(label, "only single-qubit noise is placed on wires")
    active = [(i, u, p) for i, (u, p) in enumerate(zip(channel.unitaries, channel.probs)) if p > 0]
    if not active:
        return CompatibilityWitness((), label)
    for side, slot in _adjacent_slots(structure, position):
        local = slot.qubits.index(position[1])
        if not slot.gates.finite:
            return CompatibilityWitness(tuple((i, float(p)) for i, _, p in active), label)
        gates = slot.gates.gates
        embedded = MixedUnitaryChannel(
            [embed_operator(u, [local], slot.arity) for _, u, _ in active],
            [p for _, _, p in active],
            slot.arity,
            label=label,
        )
        witness = is_compatible(embedded, gates)
        if witness and all(_closed_under(gates, u, side) for u in embedded.unitaries):
            return witness
    return Incompatible(label, "no adjacent slot absorbs the noise unitaries")


def class_compatibility(structure: CircuitStructure, channel: MixedUnitaryChannel):
    """Witnesses for every noise position, or the first :class:`Incompatible`."""
    witnesses = {}
    for pos in structure.noise_positions:
        w = placement_compatibility(structure, pos, channel)
        if not w:
            return w
        witnesses[pos] = w
    return witnesses
