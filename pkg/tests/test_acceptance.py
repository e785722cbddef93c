"""Acceptance criteria, each run at its stated tolerance and runtime budget.

Every test records one PASS/FAIL line that is printed in the terminal summary.
"""

import itertools
import math
import time
from functools import lru_cache

import numpy as np
import pytest
from conftest import dense_pauli, dense_ptm, labels, mixed_unitary_action, random_unitary, record_acceptance

from noisyrad.bounds import (
    check_example1_chain,
    check_example2,
    check_final_corollary,
    check_prop1,
    check_prop3,
    check_prop5,
    check_thm4,
    check_corollary1,
    class_gamma,
)
from noisyrad.channels import (
    MixedUnitaryChannel,
    dephasing,
    depolarizing,
    recovery_dephasing,
    recovery_depolarizing,
)
from noisyrad.circuits import default_observable, make_samples, parallel_pair, single_slot, two_layer
from noisyrad.cli import main, preset_names
from noisyrad.lp import l1_recovery_norm
from noisyrad.norms import noisy_ptm, one_inf_norm
from noisyrad.pauli import X, Y, Z
from noisyrad.rademacher import rademacher_exact, rademacher_mc

PAULIS = [np.eye(2), X, Y, Z]
STRUCTURES = {"single_slot": single_slot, "two_layer": two_layer}
GRID = list(
    itertools.product(STRUCTURES, (0.05, 0.1), (0, 1), (2, 3, 4), ("basis", "angle"))
)
OBS = default_observable(1)


def samples_for(m, encoding):
    return make_samples(m, encoding, 1, seed=1000 + m)


class Verdict:
    """Collects failures and elapsed time for one criterion."""

    def __init__(self, number, title, budget):
        self.number, self.title, self.budget = number, title, budget
        self.failures: list[str] = []
        self.cases = 0
        self.start = time.perf_counter()

    def check(self, ok, what):
        self.cases += 1
        if not ok:
            self.failures.append(str(what))

    def finish(self):
        elapsed = time.perf_counter() - self.start
        if elapsed >= self.budget:
            self.failures.append(f"runtime {elapsed:.2f}s over budget {self.budget}s")
        passed = not self.failures
        detail = f"({self.cases} cases, {elapsed:.2f}s / {self.budget}s)"
        if not passed:
            detail += " first failure: " + self.failures[0]
        record_acceptance(self.number, self.title, passed, detail)
        assert passed, self.failures[:5]


def test_criterion_01_ptm_of_noise_channels():
    v = Verdict(1, "noise channel PTMs", 1.0)
    for eps in (0.0, 0.05, 0.1, 0.2):
        d = 1 - 4 * eps
        got = depolarizing(eps).ptm().matrix
        v.check(np.abs(got - np.diag([1, d, d, d])).max() <= 1e-12, f"depolarizing {eps}")
        oracle = dense_ptm(mixed_unitary_action([X, Y, Z], [eps] * 3), 1)
        v.check(np.abs(got - oracle).max() <= 1e-12, f"depolarizing oracle {eps}")
        d = 1 - 2 * eps
        got = dephasing(eps).ptm().matrix
        v.check(np.abs(got - np.diag([1, d, d, 1])).max() <= 1e-12, f"dephasing {eps}")
        oracle = dense_ptm(mixed_unitary_action([Z], [eps]), 1)
        v.check(np.abs(got - oracle).max() <= 1e-12, f"dephasing oracle {eps}")
    v.finish()


def _dense_local_depolarizing(rho, eps, n):
    for q in range(n):
        paulis = [dense_pauli("I" * q + p + "I" * (n - q - 1)) for p in "XYZ"]
        rho = (1 - 3 * eps) * rho + eps * sum(p @ rho @ p for p in paulis)
    return rho


def test_criterion_02_row_scaling_and_resource_norm():
    v = Verdict(2, "row scaling and noisy resource norm", 10.0)
    rng = np.random.default_rng(2024)
    for i in range(20):
        n = 1 + i % 2
        k = int(rng.integers(1, 4))
        us = [random_unitary(2**n, rng) for _ in range(k)]
        probs = rng.dirichlet(np.ones(k + 1))[:k]
        eps = float(rng.choice([0.01, 0.05, 0.1, 0.2]))
        phi = MixedUnitaryChannel(us, probs, n, label="random").ptm()
        act = mixed_unitary_action(us, probs)
        v.check(np.abs(phi.matrix - dense_ptm(act, n)).max() <= 1e-10, f"channel {i} PTM")
        noisy = noisy_ptm(phi, eps)
        oracle = dense_ptm(lambda p: _dense_local_depolarizing(act(p), eps, n), n)
        v.check(np.abs(noisy.matrix - oracle).max() <= 1e-10, f"channel {i} noisy PTM")
        weights = np.array([sum(ch != "I" for ch in lab) for lab in labels(n)])
        scaled = (1 - 4 * eps) ** weights[:, None] * phi.matrix
        v.check(np.abs(noisy.matrix - scaled).max() <= 1e-10, f"channel {i} row scaling")
        bound = max(1.0, (1 - 4 * eps) * one_inf_norm(phi))
        v.check(one_inf_norm(noisy) <= bound + 1e-10, f"channel {i} resource norm")
    v.finish()


def test_criterion_03_recovery_identities():
    v = Verdict(3, "recovery identities and LP recovery norms", 10.0)
    for eps in np.linspace(0.0, 0.2, 10):
        comp = recovery_depolarizing(eps).ptm().matrix @ depolarizing(eps).ptm().matrix
        v.check(np.abs(comp - np.eye(4)).max() <= 1e-12, f"depolarizing recovery {eps}")
        closed = (1 + 2 * eps) / (1 - 4 * eps)
        v.check(abs(l1_recovery_norm(depolarizing(eps), PAULIS) - closed) <= 1e-8, f"depolarizing l1 {eps}")
        v.check(abs(recovery_depolarizing(eps).l1_weight - closed) <= 1e-12, f"depolarizing weight {eps}")
    for eps in np.linspace(0.0, 0.45, 10):
        comp = recovery_dephasing(eps).ptm().matrix @ dephasing(eps).ptm().matrix
        v.check(np.abs(comp - np.eye(4)).max() <= 1e-12, f"dephasing recovery {eps}")
        closed = 1 / (1 - 2 * eps)
        v.check(abs(l1_recovery_norm(dephasing(eps), [np.eye(2), Z]) - closed) <= 1e-8, f"dephasing l1 {eps}")
        v.check(abs(recovery_dephasing(eps).l1_weight - closed) <= 1e-12, f"dephasing weight {eps}")
    v.finish()


def test_criterion_04_noise_never_increases_complexity():
    v = Verdict(4, "adding a noisy slot never increases complexity", 300.0)
    for name, eps, k, m, enc in GRID:
        r = check_prop1(STRUCTURES[name](), depolarizing(eps), k, samples_for(m, enc), OBS)
        v.check(r.lhs <= r.rhs + 1e-9, (name, eps, k, m, enc, r.margin))
    v.finish()


def test_criterion_05_gentle_noise_lower_bound():
    v = Verdict(5, "gentle-noise lower bound for depolarizing and dephasing", 300.0)
    for name, eps, k, m, enc in GRID:
        for noise, factor in ((depolarizing(eps), 1 - 6 * eps), (dephasing(eps), 1 - 2 * eps)):
            r = check_prop3(STRUCTURES[name](), noise, k, samples_for(m, enc), OBS)
            v.check(abs(r.parameters["factor"] - factor) <= 1e-12, (name, noise.label, eps, "factor"))
            r_k1, r_k = r.rhs, r.lhs / factor
            v.check(r_k1 >= factor * r_k - 1e-9, (name, noise.label, eps, k, m, enc, r.margin))
    v.finish()


@lru_cache(maxsize=None)
def _gamma(name, kind, eps, k):
    noise = depolarizing(eps) if kind == "depolarizing" else dephasing(eps)
    return class_gamma(STRUCTURES[name](), noise, k).gamma


def test_criterion_06_robustness_lower_bound():
    v = Verdict(6, "robustness lower bound with LP gamma", 600.0)
    for name, eps, k, m, enc in GRID:
        for kind in ("depolarizing", "dephasing"):
            noise = depolarizing(eps) if kind == "depolarizing" else dephasing(eps)
            st = STRUCTURES[name]()
            g = _gamma(name, kind, eps, k)
            p5 = check_prop5(st, noise, k, gamma=g)
            v.check(p5.lhs <= p5.rhs + 1e-8, (name, kind, eps, k, "gamma", p5.lhs, p5.rhs))
            r = check_thm4(st, noise, k, samples_for(m, enc), OBS, g)
            v.check(r.margin >= -1e-9, (name, kind, eps, k, m, enc, r.margin))
    v.finish()


def test_criterion_07_closed_form_chains():
    v = Verdict(7, "closed-form factor chains", 60.0)
    for eps in np.round(np.arange(0.01, 0.1501, 0.01), 2):
        l1_vs_gamma, closed_vs_l1, strict = check_example1_chain(float(eps), single_slot())
        v.check(l1_vs_gamma.margin >= -1e-8, (eps, "gamma factor", l1_vs_gamma.margin))
        v.check(closed_vs_l1.margin >= -1e-8, (eps, "closed form", closed_vs_l1.margin))
        v.check(strict.margin > 1e-6, (eps, "strict", strict.margin))
        v.check(abs(closed_vs_l1.lhs - (1 - 4 * eps) / (1 + 2 * eps)) <= 1e-12, (eps, "closed value"))
    for eps in np.linspace(0.01, 0.45, 10):
        r = check_example2(float(eps), single_slot())
        p6, p3 = r.parameters["prop6_factor"], r.parameters["prop3_factor"]
        v.check(r.passed and abs(p6 - p3) <= 1e-9, (eps, "dephasing factors", p6, p3))
        v.check(abs(p3 - (1 - 2 * eps)) <= 1e-12, (eps, "dephasing closed", p3))
    v.finish()


FINAL_CASES = [
    (single_slot, 0.0),
    (single_slot, 0.05),
    (single_slot, 0.2),
    (two_layer, [[0.05], [0.1]]),
    (two_layer, [[0.2], [0.01]]),
    (two_layer, [[0.0], [0.15]]),
    (parallel_pair, [[0.05, 0.1]]),
    (parallel_pair, [[0.2, 0.0]]),
]


def test_criterion_08_fully_noisy_lower_bound():
    v = Verdict(8, "fully noisy lower bound with per-slot noise", 300.0)
    for make, eps in FINAL_CASES:
        st = make()
        for m, enc in itertools.product((2, 4), ("basis", "angle")):
            s = make_samples(m, enc, st.n0, seed=2000 + m)
            r = check_final_corollary(st, eps, s, default_observable(st.n0))
            v.check(r.lhs <= r.rhs + 1e-9, (make.__name__, eps, m, enc, r.margin))
    v.finish()


def test_criterion_09_resource_upper_bound():
    v = Verdict(9, "resource-norm upper bound on noisy classes", 120.0)
    for make in (single_slot, two_layer, parallel_pair):
        st = make()
        for eps, m, enc in itertools.product((0.0, 0.05, 0.1), (2, 4, 8), ("basis", "angle")):
            s = make_samples(m, enc, st.n0, seed=3000 + m)
            r = check_corollary1(st, eps, s, default_observable(st.n0))
            v.check(r.lhs <= r.rhs + 1e-9, (make.__name__, eps, m, enc, r.margin))
    v.finish()


def _double_loop(f):
    m = len(f[0])
    total = 0.0
    for signs in itertools.product((-1, 1), repeat=m):
        best = 0.0
        for row in f:
            best = max(best, abs(sum(s * x for s, x in zip(signs, row))))
        total += best
    return total / 2**m / m


def test_criterion_10_estimator_soundness():
    v = Verdict(10, "exact and Monte Carlo estimators", 120.0)
    rng = np.random.default_rng(10)
    for i in range(50):
        m = int(rng.integers(1, 9))
        f = rng.uniform(-1, 1, size=(int(rng.integers(1, 12)), m))
        v.check(abs(rademacher_exact(f).value - _double_loop(f.tolist())) <= 1e-12, f"table {i}")
    within = 0
    for seed in range(100):
        f = np.random.default_rng(500 + seed).uniform(-1, 1, size=(8, 10))
        exact = rademacher_exact(f).value
        mc = rademacher_mc(f, n_samples=2000, seed=seed)
        within += abs(mc.value - exact) <= 4 * mc.std_error
    v.check(within >= 99, f"Monte Carlo within 4 standard errors in {within}/100 runs")
    v.finish()


@pytest.mark.slow
def test_criterion_11_preset_suite_is_deterministic(tmp_path):
    v = Verdict(11, "preset suite reruns are byte-identical", math.inf)
    for preset in preset_names():
        outputs = []
        for run in ("a", "b"):
            out = tmp_path / preset / run
            code = main(["run", "--config", preset, "--out", str(out), "--seed", "0"])
            v.check(code == 0, (preset, run, "exit code", code))
            outputs.append(((out / "reports.jsonl").read_bytes(), (out / "reports.csv").read_bytes()))
        v.check(outputs[0] == outputs[1], (preset, "bytes differ"))
    v.finish()
