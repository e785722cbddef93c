"""Pauli-basis representations of operators and channels.

Pauli strings over ``n`` qubits are indexed by base-4 integers with qubit 0
as the most significant digit (0=I, 1=X, 2=Y, 3=Z), so the basis element for
index ``z`` is ``kron(P[z_0], P[z_1], ..., P[z_{n-1}])``. Every row/column
convention in the package follows from this ordering.

Operators ``Q`` are represented by vectors ``alpha_z = 2**-n Tr[P_z Q]`` and
channels by transfer matrices ``M_zx = 2**-n Tr[P_z Phi(P_x)]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Sequence

import numpy as np

from .errors import DimensionError, HermiticityError

MAX_QUBITS = 6
HERMITIAN_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
SINGLE_PAULIS = (I2, X, Y, Z)
_LABELS = "IXYZ"


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _check_qubits(n: int) -> None:
    if n < 1:
        raise DimensionError(f"qubit count must be >= 1, got {n}")
    if n > MAX_QUBITS:
        raise DimensionError(f"qubit count {n} exceeds the cap of {MAX_QUBITS}")


def num_qubits_for_dim(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise DimensionError(f"dimension {dim} is not a power of two >= 2")
    _check_qubits(n)
    return n


@dataclass(frozen=True)
class PauliString:
    symbols: tuple[int, ...]

    def __post_init__(self):
        if len(self.symbols) < 1:
            raise DimensionError("a Pauli string needs at least one qubit")
        if any(s not in (0, 1, 2, 3) for s in self.symbols):
            raise ValueError(f"Pauli symbols must lie in 0..3, got {self.symbols}")

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        try:
            return cls(tuple(_LABELS.index(c) for c in label.upper()))
        except ValueError:
            raise ValueError(f"invalid Pauli label {label!r}") from None

    @classmethod
    def from_index(cls, index: int, n: int) -> PauliString:
        if not 0 <= index < 4**n:
            raise DimensionError(f"index {index} out of range for {n} qubits")
        digits = []
        for _ in range(n):
            index, d = divmod(index, 4)
            digits.append(d)
        return cls(tuple(reversed(digits)))

    @property
    def n(self) -> int:
        return len(self.symbols)

    @property
    def weight(self) -> int:
        return sum(1 for s in self.symbols if s != 0)

    @property
    def index(self) -> int:
        return reduce(lambda acc, s: 4 * acc + s, self.symbols, 0)

    @property
    def label(self) -> str:
        return "".join(_LABELS[s] for s in self.symbols)

    def matrix(self) -> np.ndarray:
        return reduce(np.kron, (SINGLE_PAULIS[s] for s in self.symbols))


@lru_cache(maxsize=None)
def pauli_basis(n: int) -> np.ndarray:
    """All ``4**n`` Pauli matrices stacked as an array of shape (4^n, 2^n, 2^n)."""
    _check_qubits(n)
    basis = np.stack(SINGLE_PAULIS)
    for _ in range(n - 1):
        basis = np.einsum("aij,bkl->abikjl", basis, np.stack(SINGLE_PAULIS))
        d = basis.shape[2] * basis.shape[3]
        basis = basis.reshape(-1, d, d)
    return _readonly(basis)


@lru_cache(maxsize=None)
def pauli_weights(n: int) -> np.ndarray:
    """Weight of every Pauli string, in index order."""
    _check_qubits(n)
    w = np.zeros(1, dtype=int)
    for _ in range(n):
        w = (w[:, None] + np.array([0, 1, 1, 1])[None, :]).ravel()
    return _readonly(w)


@dataclass(frozen=True, eq=False)
class RepVector:
    """Pauli-basis representation ``alpha_z = 2**-n Tr[P_z Q]`` of an operator."""

    n: int
    entries: np.ndarray

    def __post_init__(self):
        _check_qubits(self.n)
        e = np.array(self.entries, dtype=float)
        if e.shape != (4**self.n,):
            raise DimensionError(f"expected {4**self.n} entries, got shape {e.shape}")
        object.__setattr__(self, "entries", _readonly(e))

    def __getitem__(self, z):
        if isinstance(z, PauliString):
            z = z.index
        return self.entries[z]

    def __repr__(self):
        return f"RepVector(n={self.n}, entries={np.array2string(self.entries, precision=6)})"


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Real ``4**n_out x 4**n_in`` matrix of a channel in the Pauli basis."""

    n_in: int
    n_out: int
    matrix: np.ndarray

    def __post_init__(self):
        _check_qubits(self.n_in)
        _check_qubits(self.n_out)
        m = np.array(self.matrix, dtype=float)
        if m.shape != (4**self.n_out, 4**self.n_in):
            raise DimensionError(
                f"expected shape {(4**self.n_out, 4**self.n_in)}, got {m.shape}"
            )
        object.__setattr__(self, "matrix", _readonly(m))

    @classmethod
    def identity(cls, n: int) -> TransferMatrix:
        return cls(n, n, np.eye(4**n))

    @property
    def n(self) -> int:
        if self.n_in != self.n_out:
            raise DimensionError("channel is not qubit-preserving")
        return self.n_in

    def row(self, z) -> np.ndarray:
        if isinstance(z, PauliString):
            z = z.index
        return self.matrix[z]

    def __repr__(self):
        return f"TransferMatrix(n_in={self.n_in}, n_out={self.n_out})"


def _real(a: np.ndarray, what: str, tol: float = HERMITIAN_TOL) -> np.ndarray:
    if a.size and np.max(np.abs(a.imag)) > tol:
        raise HermiticityError(f"{what} has imaginary Pauli components (not Hermitian)")
    return a.real


def pauli_coefficients(op: np.ndarray) -> np.ndarray:
    """Complex ``2**-n Tr[P_z op]`` for every ``z``; no Hermiticity requirement."""
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DimensionError(f"operator must be square, got shape {op.shape}")
    n = num_qubits_for_dim(op.shape[0])
    basis = pauli_basis(n)
    # Tr[P op] = sum_ij P_ij op_ji
    return np.einsum("zij,ji->z", basis, op) / 2**n


def rep_vector(op: np.ndarray) -> RepVector:
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DimensionError(f"operator must be square, got shape {op.shape}")
    n = num_qubits_for_dim(op.shape[0])
    if np.max(np.abs(op - op.conj().T)) > HERMITIAN_TOL:
        raise HermiticityError("operator is not Hermitian within 1e-10")
    return RepVector(n, _real(pauli_coefficients(op), "operator"))


def operator_from_rep(vec: RepVector) -> np.ndarray:
    """Inverse of :func:`rep_vector`: ``Q = sum_z alpha_z P_z``."""
    return np.einsum("z,zij->ij", vec.entries, pauli_basis(vec.n))


def _kraus_ptm(kraus: Sequence[np.ndarray], weights: Sequence[float] | None = None) -> np.ndarray:
    ops = [np.asarray(k, dtype=complex) for k in kraus]
    dims = {k.shape for k in ops}
    if len(dims) != 1:
        raise DimensionError(f"inconsistent operator shapes {sorted(dims)}")
    d_out, d_in = ops[0].shape
    n_out, n_in = num_qubits_for_dim(d_out), num_qubits_for_dim(d_in)
    if weights is None:
        weights = np.ones(len(ops))
    b_in, b_out = pauli_basis(n_in), pauli_basis(n_out)
    images = np.zeros((4**n_in, d_out, d_out), dtype=complex)
    for w, k in zip(weights, ops):
        if w == 0:
            continue
        images += w * np.einsum("ij,xjk,lk->xil", k, b_in, k.conj())
    m = np.einsum("zij,xji->zx", b_out, images) / d_out
    return _real(m, "channel")


def unitary_ptm(u: np.ndarray) -> TransferMatrix:
    u = np.asarray(u, dtype=complex)
    n = num_qubits_for_dim(u.shape[0])
    return TransferMatrix(n, n, _kraus_ptm([u]))


def transfer_matrix(channel) -> TransferMatrix:
    """PTM of a mixed-unitary channel, a quasi-channel, a Kraus list or a unitary.

    Channel objects are recognised by a ``terms()`` method returning
    ``(coefficient, unitary)`` pairs; the channel is then
    ``sum_i c_i U_i (.) U_i^dagger`` and its PTM the same combination of
    unitary PTMs.
    """
    if hasattr(channel, "terms"):
        terms = channel.terms()
        mats = [np.asarray(u, dtype=complex) for _, u in terms]
        if len({m.shape for m in mats}) != 1:
            raise DimensionError("unitaries of the channel have inconsistent dimensions")
        m = _kraus_ptm(mats, [c for c, _ in terms])
    elif isinstance(channel, np.ndarray) and channel.ndim == 2:
        m = _kraus_ptm([channel])
    else:
        m = _kraus_ptm(list(channel))
    n_out = num_qubits_for_dim(int(round(np.sqrt(m.shape[0]))))
    n_in = num_qubits_for_dim(int(round(np.sqrt(m.shape[1]))))
    return TransferMatrix(n_in, n_out, m)


def compose(m2: TransferMatrix, m1: TransferMatrix) -> TransferMatrix:
    """PTM of ``Phi2 o Phi1`` (apply ``m1`` first)."""
    if m1.n_out != m2.n_in:
        raise DimensionError(f"cannot compose: {m1.n_out} outputs into {m2.n_in} inputs")
    return TransferMatrix(m1.n_in, m2.n_out, m2.matrix @ m1.matrix)


def tensor(m1: TransferMatrix, m2: TransferMatrix) -> TransferMatrix:
    """PTM of ``Phi1 (x) Phi2`` with ``m1`` on the leading qubits."""
    return TransferMatrix(m1.n_in + m2.n_in, m1.n_out + m2.n_out, np.kron(m1.matrix, m2.matrix))


def apply(m: TransferMatrix, state: RepVector) -> RepVector:
    if state.n != m.n_in:
        raise DimensionError(f"state on {state.n} qubits, channel expects {m.n_in}")
    return RepVector(m.n_out, m.matrix @ state.entries)


def expectation(obs: RepVector, state: RepVector) -> float:
    """``Tr[rho H]`` from representation vectors: ``2**n * <alpha^H, alpha^rho>``."""
    if obs.n != state.n:
        raise DimensionError(f"observable on {obs.n} qubits, state on {state.n}")
    return float(2**obs.n * np.dot(obs.entries, state.entries))


def embed_operator(op: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Lift an operator acting on ``qubits`` (in that order) to ``n`` qubits."""
    op = np.asarray(op, dtype=complex)
    k = len(qubits)
    if op.shape != (2**k, 2**k):
        raise DimensionError(f"operator shape {op.shape} does not match {k} qubits")
    if len(set(qubits)) != k or any(not 0 <= q < n for q in qubits):
        raise DimensionError(f"invalid qubit list {list(qubits)} for {n} qubits")
    rest = [q for q in range(n) if q not in qubits]
    full = np.kron(op, np.eye(2 ** len(rest), dtype=complex))
    # full acts on qubit order (qubits..., rest...); permute back to 0..n-1
    order = list(qubits) + rest
    perm = [order.index(q) for q in range(n)]
    t = full.reshape([2] * (2 * n))
    t = t.transpose(perm + [n + p for p in perm])
    return t.reshape(2**n, 2**n)


def pure_state_rep(psi: np.ndarray) -> RepVector:
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return rep_vector(np.outer(psi, psi.conj()))


def pauli_observable(label: str) -> RepVector:
    return rep_vector(PauliString.from_label(label).matrix())
