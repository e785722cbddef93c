import itertools

import numpy as np
import pytest
from hypothesis import settings
from scipy.stats import unitary_group

# fixed example streams so repeated runs of the suite see the same cases
settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")

# Independent dense-matrix oracles. These never touch the package's basis
# construction so they can catch ordering and normalisation mistakes.
_P = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_pauli(label):
    out = np.array([[1.0 + 0j]])
    for ch in label:
        out = np.kron(out, _P[ch])
    return out


def labels(n):
    return ["".join(t) for t in itertools.product("IXYZ", repeat=n)]


def dense_ptm(apply_channel, n):
    """M[z, x] = 2^-n Tr[P_z Phi(P_x)] from an explicit channel action."""
    ls = labels(n)
    m = np.zeros((4**n, 4**n))
    for x, lx in enumerate(ls):
        out = apply_channel(dense_pauli(lx))
        for z, lz in enumerate(ls):
            m[z, x] = np.trace(dense_pauli(lz) @ out).real / 2**n
    return m


def mixed_unitary_action(unitaries, probs):
    def act(rho):
        out = (1 - sum(probs)) * rho
        for u, p in zip(unitaries, probs):
            out = out + p * u @ rho @ u.conj().T
        return out

    return act


def random_unitary(dim, rng):
    return unitary_group.rvs(dim, random_state=rng)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# --- acceptance summary ------------------------------------------------------------

ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}


def record_acceptance(number: int, title: str, passed: bool, detail: str = ""):
    ACCEPTANCE_RESULTS[number] = ("PASS" if passed else "FAIL", f"{title} {detail}".strip())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        status, text = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"{status} criterion {n:>2}: {text}")
