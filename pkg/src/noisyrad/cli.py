"""Command-line harness: run JSON experiment configs and export plot data.

    noisyrad run --config CONFIG [--out DIR] [--seed N] [--jobs N]
    noisyrad plot-data --in DIR --out FILE.csv
    noisyrad presets list

``CONFIG`` is a path or the name of a shipped preset. Exit codes: 0 all
checks pass, 1 some check fails, 2 bad config or missing files, 3 runtime
error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import bounds
from .channels import channel_from_dict, dephasing, depolarizing
from .circuits import (
    CircuitStructure,
    ENCODINGS,
    class_compatibility,
    default_observable,
    make_samples,
    parallel_pair,
    resolve_epsilons,
    samples_from_inputs,
    single_slot,
    two_layer,
)
from .errors import ConfigError, NoisyRadError
from .norms import random_mixed_unitary
from .pauli import pauli_observable, transfer_matrix

log = logging.getLogger("noisyrad")

OUT_ENV = "NOISYRAD_OUT"
DEFAULT_OUT = "noisyrad-out"

CHECKS = (
    "prop1", "prop2", "prop3", "prop5", "prop6", "thm4",
    "final_corollary", "corollary1", "example1", "example2",
)
# grid axes each check depends on; the rest are ignored for that check
AXES = {
    "prop1": ("structure", "epsilon", "k", "m"),
    "prop3": ("structure", "epsilon", "k", "m"),
    "thm4": ("structure", "epsilon", "k", "m"),
    "prop6": ("structure", "epsilon", "k", "m"),
    "prop5": ("structure", "epsilon", "k"),
    "final_corollary": ("structure", "epsilon", "m"),
    "corollary1": ("structure", "epsilon", "m"),
    "example1": ("structure", "epsilon", "k"),
    "example2": ("structure", "epsilon"),
    "prop2": ("epsilon",),
}
KNOWN_FIELDS = {
    "name", "description", "structure", "noise", "k", "encoding", "observable", "samples",
    "estimator", "checks", "seed", "prop2",
}
STRUCTURE_FACTORIES = {"single_slot": single_slot, "two_layer": two_layer, "parallel_pair": parallel_pair}


# --- configuration ------------------------------------------------------------------


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _flatten(v):
    if isinstance(v, (list, tuple)):
        for x in v:
            yield from _flatten(x)
    else:
        yield v


def _structure(doc, where: str) -> CircuitStructure:
    try:
        if isinstance(doc, str):
            name, _, gs = doc.partition(":")
            if name not in STRUCTURE_FACTORIES:
                raise ConfigError(where, f"unknown structure {name!r}; choose from {sorted(STRUCTURE_FACTORIES)}")
            return STRUCTURE_FACTORIES[name](gs or "clifford1")
        if isinstance(doc, dict):
            return CircuitStructure.from_dict(doc)
    except NoisyRadError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(where, str(exc)) from exc
    raise ConfigError(where, "expected a structure name or document")


def _epsilon_grid(v) -> list:
    """Scalars and flat lists are grids; a nested list is one per-slot matrix."""
    if v is None:
        return [None]
    if not isinstance(v, list):
        return [v]
    if v and all(isinstance(e, list) for e in v):
        if all(isinstance(x, list) for e in v for x in e):
            return v  # grid of per-slot matrices
        return [v]
    return v


@dataclass
class ExperimentConfig:
    name: str
    structures: list[CircuitStructure]
    noise_kind: str
    noise_doc: dict
    epsilons: list
    ks: list[int]
    encoding: str
    observable: str | None
    ms: list[int]
    inputs: list | None
    estimator: dict
    checks: list[str]
    seed: int
    prop2: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        if not isinstance(doc, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        unknown = set(doc) - KNOWN_FIELDS
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown field")
        checks = _as_list(doc.get("checks", []))
        for c in checks:
            if c not in CHECKS:
                raise ConfigError("checks", f"unknown check {c!r}; choose from {list(CHECKS)}")
        structures = [
            _structure(s, f"structure[{i}]") for i, s in enumerate(_as_list(doc.get("structure", "single_slot")))
        ]
        noise = doc.get("noise", {"kind": "depolarizing", "epsilon": 0.0})
        if not isinstance(noise, dict) or "kind" not in noise:
            raise ConfigError("noise", "expected an object with a 'kind'")
        kind = noise["kind"]
        if kind in ("depolarizing", "dephasing"):
            eps = _epsilon_grid(noise.get("epsilon", 0.0))
            hi = 0.25 if kind == "depolarizing" else 0.5
            for x in _flatten(eps):
                if isinstance(x, bool) or not isinstance(x, (int, float)) or not 0 <= x <= hi:
                    raise ConfigError("noise.epsilon", f"{x!r} outside [0, {hi}] for {kind}")
        elif kind == "mixed_unitary":
            eps = [None]
            try:
                channel_from_dict(noise)
            except (NoisyRadError, KeyError, TypeError, ValueError) as exc:
                raise ConfigError("noise", str(exc)) from exc
        else:
            raise ConfigError("noise.kind", f"unknown noise kind {kind!r}")
        ks = [int(k) for k in _as_list(doc.get("k", 0))]
        if any(k < 0 for k in ks):
            raise ConfigError("k", "k must be >= 0")
        encoding = doc.get("encoding", "basis")
        if encoding not in ENCODINGS:
            raise ConfigError("encoding", f"unknown encoding {encoding!r}")
        samples = doc.get("samples", {"m": 3})
        inputs = samples.get("inputs")
        ms = [len(inputs)] if inputs is not None else [int(m) for m in _as_list(samples.get("m", 3))]
        if any(m < 1 for m in ms):
            raise ConfigError("samples.m", "m must be >= 1")
        est = dict(doc.get("estimator", {}))
        try:
            bounds.Estimator(**{k: v for k, v in est.items() if k != "seed"})
        except (TypeError, NoisyRadError) as exc:
            raise ConfigError("estimator", str(exc)) from exc
        obs = doc.get("observable")
        for s in structures:
            if obs is not None and len(obs) != s.n0:
                raise ConfigError("observable", f"label {obs!r} does not act on {s.n0} qubits")
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed", "seed must be a nonnegative integer")
        return cls(
            str(doc.get("name", "experiment")), structures, kind, noise, eps, ks, encoding, obs, ms,
            inputs, est, checks, seed, dict(doc.get("prop2", {})),
        )

    def noise(self, eps):
        if self.noise_kind == "depolarizing":
            return depolarizing(float(eps))
        if self.noise_kind == "dephasing":
            return dephasing(float(eps))
        return channel_from_dict(self.noise_doc)

    def validate(self) -> None:
        """Check module preconditions so bad configs fail before any work."""
        for c in self.checks:
            needs_noise = c in ("prop1", "prop3", "thm4", "prop5", "prop6")
            for si, s in enumerate(self.structures):
                where = f"structure[{si}]"
                if c in ("final_corollary", "corollary1"):
                    if self.noise_kind != "depolarizing":
                        raise ConfigError("noise.kind", f"{c} is stated for depolarizing noise")
                    for e in self.epsilons:
                        try:
                            eps = resolve_epsilons(s, e)
                        except NoisyRadError as exc:
                            raise ConfigError("noise.epsilon", str(exc)) from exc
                        if any(v >= 0.25 for row in eps for v in row):
                            raise ConfigError("noise.epsilon", f"{c} needs epsilon < 1/4")
                if c in ("thm4", "prop5", "example1", "example2", "final_corollary", "corollary1") and not s.finite:
                    raise ConfigError(where, f"{c} needs a finite (enumerable) class")
                if c == "example1" and any(not (isinstance(e, (int, float)) and 0 < e < 1 / 6) for e in self.epsilons):
                    raise ConfigError("noise.epsilon", "example1 needs scalar 0 < epsilon < 1/6")
                if c == "example2" and any(not (isinstance(e, (int, float)) and 0 <= e < 0.5) for e in self.epsilons):
                    raise ConfigError("noise.epsilon", "example2 needs scalar 0 <= epsilon < 1/2")
                if needs_noise:
                    for e in self.epsilons:
                        if isinstance(e, list):
                            raise ConfigError("noise.epsilon", f"{c} takes a scalar epsilon")
                        w = class_compatibility(s, self.noise(e))
                        if not w:
                            raise ConfigError("noise", f"{c}: not compatible with {where}: {w.reason}")


def load_config(ref: str) -> dict:
    path = Path(ref)
    if path.is_file():
        text = path.read_text()
    elif ref in preset_names():
        text = (resources.files("noisyrad") / "presets" / f"{ref}.json").read_text()
    else:
        raise FileNotFoundError(f"no config file or preset named {ref!r}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from exc


def preset_names() -> list[str]:
    root = resources.files("noisyrad") / "presets"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


# --- execution ------------------------------------------------------------------------


def _seed(root: int, *key: int) -> int:
    """Counter-based child seed: one stream per key, independent of run order."""
    return int(np.random.SeedSequence(root, spawn_key=key).generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class Task:
    check: str
    structure: int
    epsilon: int
    k: int
    m: int


def tasks(cfg: ExperimentConfig) -> list[Task]:
    out = []
    seen = set()
    for c in cfg.checks:
        axes = AXES[c]
        for si in range(len(cfg.structures)):
            for ei in range(len(cfg.epsilons)):
                for ki in range(len(cfg.ks)):
                    for mi in range(len(cfg.ms)):
                        t = Task(
                            c,
                            si if "structure" in axes else 0,
                            ei if "epsilon" in axes else 0,
                            ki if "k" in axes else 0,
                            mi if "m" in axes else 0,
                        )
                        if t not in seen:
                            seen.add(t)
                            out.append(t)
    return out


def _samples(cfg: ExperimentConfig, si: int, mi: int):
    s = cfg.structures[si]
    if cfg.inputs is not None:
        return samples_from_inputs(cfg.inputs, cfg.encoding, s.n0), None
    seed = _seed(cfg.seed, si, mi, 0)
    return make_samples(cfg.ms[mi], cfg.encoding, s.n0, seed), seed


def run_task(cfg: ExperimentConfig, t: Task) -> list[bounds.BoundsReport]:
    s = cfg.structures[t.structure]
    e = cfg.epsilons[t.epsilon]
    k = cfg.ks[t.k]
    obs = pauli_observable(cfg.observable) if cfg.observable else default_observable(s.n0)
    if t.check == "prop2":
        return _prop2(cfg, e, _seed(cfg.seed, t.epsilon, 2))
    if t.check == "example1":
        return bounds.check_example1_chain(float(e), s, k)
    if t.check == "example2":
        return [bounds.check_example2(float(e), s)]
    noise = cfg.noise(e) if not isinstance(e, list) else None
    if t.check == "prop5":
        return [bounds.check_prop5(s, noise, k)]
    samples, sample_seed = _samples(cfg, t.structure, t.m)
    est = bounds.Estimator(**{**cfg.estimator, "seed": _seed(cfg.seed, t.structure, t.m, 1)})
    if t.check == "prop1":
        r = bounds.check_prop1(s, noise, k, samples, obs, est)
    elif t.check == "prop3":
        r = bounds.check_prop3(s, noise, k, samples, obs, est)
    elif t.check == "thm4":
        g = bounds.class_gamma(s, noise, k)
        r = bounds.check_thm4(s, noise, k, samples, obs, g.gamma, est)
        r.parameters["gamma_circuit_id"] = g.circuit_id
        r.parameters["lp_method"] = g.method
    elif t.check == "prop6":
        r = bounds.check_prop6(s, noise, k, samples, obs, bounds.class_l1(s, noise), est)
    elif t.check == "final_corollary":
        r = bounds.check_final_corollary(s, e, samples, obs, est)
    elif t.check == "corollary1":
        r = bounds.check_corollary1(s, e, samples, obs, est)
    else:  # pragma: no cover - guarded by validation
        raise ConfigError("checks", t.check)
    r.provenance["sample_seed"] = sample_seed
    r.provenance["root_seed"] = cfg.seed
    return [r]


def _prop2(cfg: ExperimentConfig, eps, seed: int) -> list[bounds.BoundsReport]:
    rng = np.random.default_rng(seed)
    n_channels = int(cfg.prop2.get("n_channels", 20))
    qubits = [int(q) for q in cfg.prop2.get("qubits", [1, 2])]
    out = []
    for i in range(n_channels):
        n = qubits[i % len(qubits)]
        m = transfer_matrix(random_mixed_unitary(n, rng))
        r = bounds.check_prop2(m, float(eps), label=f"random{i}")
        r.parameters.update({"seed": seed, "qubits": n})
        out.append(r)
    return out


def _sort_key(r: bounds.BoundsReport):
    return (r.inequality_id, json.dumps(r.parameters, sort_keys=True, default=bounds._json_default))


def _run_one(args):
    cfg, t = args
    return run_task(cfg, t)


def execute(cfg: ExperimentConfig, jobs: int = 1) -> list[bounds.BoundsReport]:
    ts = tasks(cfg)
    if jobs > 1 and len(ts) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_one, [(cfg, t) for t in ts]))
    else:
        chunks = [run_task(cfg, t) for t in ts]
    reports = [r for c in chunks for r in c]
    return sorted(reports, key=_sort_key)


def write_reports(reports, out: Path) -> tuple[Path, Path]:
    out.mkdir(parents=True, exist_ok=True)
    jl, cs = out / "reports.jsonl", out / "reports.csv"
    jl.write_text("".join(r.to_json() + "\n" for r in reports))
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(bounds.reports_to_csv_rows(reports))
    cs.write_text(buf.getvalue())
    return jl, cs


def summary(reports) -> str:
    lines = [f"{'check':<28}{'lhs':>14}{'rhs':>14}{'margin':>14}  result"]
    for r in reports:
        lines.append(
            f"{r.inequality_id:<28}{r.lhs:>14.6g}{r.rhs:>14.6g}{r.margin:>14.3e}  {'PASS' if r.passed else 'FAIL'}"
        )
    n_fail = sum(not r.passed for r in reports)
    lines.append(f"{len(reports)} checks, {n_fail} failed")
    return "\n".join(lines)


# --- plot data ------------------------------------------------------------------------

PLOT_COLUMNS = (
    "inequality_id", "structure", "epsilon", "k", "m", "encoding", "r_k", "r_k1", "factor",
    "prop3_factor", "lhs", "rhs", "margin", "pass",
)


def plot_rows(reports: list[dict]) -> list[list]:
    rows = []
    for r in reports:
        p = r.get("parameters", {})
        eps = p.get("epsilon")
        total = p.get("total_error")
        rows.append([
            r["inequality_id"],
            json.dumps(r.get("provenance", {}).get("structure"), sort_keys=True),
            json.dumps(eps) if isinstance(eps, list) else ("" if eps is None else eps),
            p.get("k", ""),
            p.get("m", ""),
            p.get("encoding", ""),
            p.get("r_k", p.get("r_noiseless", "")),
            p.get("r_k1", p.get("r_noisy", "")),
            p.get("factor", p.get("prop6_factor", "")),
            "" if total is None else 1 - 2 * total,
            r["lhs"],
            r["rhs"],
            r["margin"],
            str(r["pass"]).lower(),
        ])
    return rows


def plot_data(src: Path, dst: Path) -> int:
    path = src / "reports.jsonl" if src.is_dir() else src
    if not path.is_file():
        raise FileNotFoundError(f"no reports at {path}")
    reports = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLOT_COLUMNS)
    w.writerows(plot_rows(reports))
    dst.parent.mkdir(parents=True, exist_ok=True)
    dst.write_text(buf.getvalue())
    return len(reports)


# --- entry point ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="noisyrad", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config or preset")
    r.add_argument("--config", required=True, help="config path or preset name")
    r.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or {DEFAULT_OUT})")
    r.add_argument("--seed", type=int, default=None, help="root seed, overrides the config")
    r.add_argument("--jobs", type=int, default=1)
    pd = sub.add_parser("plot-data", help="export tidy CSV series from reports")
    pd.add_argument("--in", dest="src", required=True)
    pd.add_argument("--out", required=True)
    pr = sub.add_parser("presets", help="list shipped presets")
    pr.add_argument("action", choices=["list"])
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "presets":
        for name in preset_names():
            doc = json.loads((resources.files("noisyrad") / "presets" / f"{name}.json").read_text())
            print(f"{name:<28}{doc.get('description', '')}")
        return 0
    if args.command == "plot-data":
        try:
            n = plot_data(Path(args.src), Path(args.out))
        except (FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(f"wrote {n} rows to {args.out}")
        return 0
    try:
        doc = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed", "seed must be nonnegative")
            doc["seed"] = args.seed
        if args.jobs < 1:
            raise ConfigError("--jobs", "must be >= 1")
        cfg = ExperimentConfig.from_dict(doc)
        cfg.validate()
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        reports = execute(cfg, args.jobs)
    except (NoisyRadError, ArithmeticError, ValueError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    jl, cs = write_reports(reports, out)
    print(summary(reports))
    log.info("reports written to %s and %s", jl, cs)
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
