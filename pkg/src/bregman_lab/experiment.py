"""Run one configured experiment and persist it as ``record.csv`` plus
``report.txt``.

Verdicts are computed from the persisted rows (and the config), so a
record reloaded from disk reproduces the same verdict.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .algorithms import (
    DESCENT_SLACK,
    alternating_projections,
    bregman_gradient,
    decaying_steps,
    fejer_from_arrays,
    mirror_descent,
    proximal_d,
)
from .config import ExperimentConfig, parse_config, resolve_generator
from .domains import Ball, Box, Polytope, Simplex
from .objectives import OBJECTIVES
from .probes import (
    FAILS,
    HOLDS,
    blowup_verdict,
    combine_verdicts,
    condition_a_verdict,
    counterexample_grid,
    curve_verdict,
    default_curves,
    chord_curve,
    disk_counterexample,
    predict_condition_a,
    predict_condition_b,
    probe_chord_blowup,
    probe_condition_a,
    probe_condition_b,
    AFFINE_TOL,
)

CONFIG_BEGIN = "--- config ---"
CONFIG_END = "--- end config ---"
COUNTEREXAMPLE_TOL = 1e-4


@dataclass
class RunRecord:
    config: ExperimentConfig
    columns: list
    rows: list
    verdict: str
    predicted: str | None
    matches: bool
    details: dict = field(default_factory=dict)
    wall_time: float = math.nan
    version: str = __version__

    @property
    def kind(self):
        return self.config.kind

    @property
    def exit_code(self) -> int:
        return 0 if self.matches else 2

    def column(self, name) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(f"no column {name!r}; available: {', '.join(self.columns)}")
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def report(self) -> str:
        lines = [f"bregman-lab {self.version}",
                 f"experiment: {self.kind}",
                 f"seed: {self.config.seed}",
                 f"verdict: {self.verdict}",
                 f"predicted: {self.predicted}",
                 f"matches prediction: {self.matches}",
                 f"rows: {len(self.rows)}",
                 f"wall time: {self.wall_time:.3f} s"]
        lines += [f"{k}: {v}" for k, v in self.details.items()]
        lines += ["", CONFIG_BEGIN, self.config.text.rstrip("\n"), CONFIG_END, ""]
        return "\n".join(lines)


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _parse_cell(s):
    try:
        return float(s)
    except ValueError:
        return s


# --- component construction ---------------------------------------------------

def build_domain(sec: dict):
    kind = sec.get("kind", "ball")
    if kind == "simplex":
        return Simplex(sec["dim"])
    if kind == "box":
        return Box(sec.get("lo", 0.0), sec.get("hi", 1.0), dim=sec.get("dim"))
    if kind == "ball":
        return Ball(sec.get("dim", 2), sec.get("radius", 1.0), sec.get("center"))
    return Polytope(sec["A"], sec["b"])


def build_generator(cfg: ExperimentConfig):
    domain = build_domain(cfg.section("domain"))
    return resolve_generator(cfg.get("generator", "name", "ball"))(domain)


def build_objective(cfg: ExperimentConfig, gen):
    sec = cfg.section("objective")
    name = sec["name"]
    if name == "linear":
        obj = OBJECTIVES[name](gen.domain, sec.get("c", np.zeros(gen.dim)), gen)
    elif name == "constant":
        obj = OBJECTIVES[name](gen.domain, sec.get("value", 0.0), gen)
    else:
        obj = OBJECTIVES[name](gen.domain, sec.get("a", 0.0), gen)
    if "solution" in sec:
        sol = np.atleast_2d(np.asarray(sec["solution"], dtype=float))
        obj = replace(obj, solutions=tuple(sol))
    return obj


def _solutions(cfg, gen, obj):
    alg = cfg.section("algorithm")
    if alg["name"] == "alternating_projections":
        return [np.asarray(alg["witness"], dtype=float)]
    return [np.asarray(y, dtype=float) for y in obj.solutions]


# --- runs -----------------------------------------------------------------------

def _steps(alg, obj):
    if alg.get("schedule", "decaying") == "constant":
        return float(alg.get("alpha", 1.0))
    lip = obj.lipschitz_const if obj is not None else None
    alpha0 = alg.get("alpha0", 1.0 / lip if lip else 1.0)
    return decaying_steps(alpha0, alg.get("exponent", 0.75))


def _run_rows(cfg: ExperimentConfig):
    gen = build_generator(cfg)
    alg = cfg.section("algorithm")
    name, K = alg["name"], alg["K"]
    x0 = np.asarray(alg.get("x0", gen.domain.interior_point), dtype=float)
    obj = None
    if name == "alternating_projections":
        sets = [(a, b) for a, b in zip(alg["A"], alg["b"])]
        traj = alternating_projections(gen, sets, x0, K, witness=alg["witness"])
    else:
        obj = build_objective(cfg, gen)
        refs = [np.asarray(y) for y in obj.solutions]
        if name == "mirror_descent":
            traj = mirror_descent(gen, obj, x0, _steps(alg, obj), K, references=refs)
        elif name == "bregman_gradient":
            traj = bregman_gradient(gen, obj, x0, alg["alpha"], K, references=refs)
        else:
            traj = proximal_d(gen, obj, x0, _steps(alg, obj), K, references=refs)
    sols = _solutions(cfg, gen, obj)
    columns = ["k", *[f"x_{i}" for i in range(gen.dim)], "f", "step",
               *[f"D_y{j}" for j in range(len(sols))]]
    series = [traj.divergence_series(y) for y in sols]
    has_res = traj.residuals is not None
    if has_res:
        columns.append("residual")
    rows = []
    for k in range(1, len(traj)):
        row = [k, *traj.iterates[k].tolist(), float(traj.objectives[k]),
               float(traj.step_sizes[k - 1]), *[float(s[k]) for s in series]]
        if has_res:
            row.append(float(traj.residuals[k - 1]))
        rows.append(row)
    details = {"x0": x0.tolist(), "final iterate": traj.final.tolist(),
               "references": [y.tolist() for y in sols]}
    return columns, rows, details


def _evaluate_run(cfg, columns, rows):
    name = cfg.get("algorithm", "name")
    dcols = [c for c in columns if c.startswith("D_y")]
    if name == "mirror_descent" or not dcols:
        return "COMPLETED", None, {}
    rec = np.array([[r[columns.index(c)] for c in dcols] for r in rows])
    worst = float(np.max(np.diff(rec, axis=0))) if len(rec) > 1 else 0.0
    verdict = "MONOTONE" if worst <= DESCENT_SLACK else "NOT MONOTONE"
    return verdict, "MONOTONE", {"max divergence increase": worst}


def _evaluate_diagnose(cfg, columns, rows):
    gen = build_generator(cfg)
    obj = None if cfg.get("algorithm", "name") == "alternating_projections" \
        else build_objective(cfg, gen)
    sols = _solutions(cfg, gen, obj)
    xs = np.array([[r[columns.index(f"x_{i}")] for i in range(gen.dim)] for r in rows])
    series = [np.array([r[columns.index(f"D_y{j}")] for r in rows]) for j in range(len(sols))]
    tol = cfg.get("diagnose", "tol", 1e-3)
    metadata_ok = (gen.legendre_on_C and gen.continuous_on_closure
                   and gen.strictly_convex_on_closure and gen.domain.is_polytope)
    rep = fejer_from_arrays(xs, series, sols, tol, metadata_ok)
    verdict = ("FEJER" if rep.fejer else "NOT FEJER") + (" CONVERGED" if rep.converged else "")
    predicted = "FEJER CONVERGED" if metadata_ok else "FEJER"
    matches = rep.fejer and rep.consistent
    details = {"summary": rep.summary(), "oscillations": rep.oscillations,
               "convergence predicted": rep.convergence_predicted}
    return verdict, predicted, details, matches


# --- probes ----------------------------------------------------------------------

def _grid(probe, j_min=4, j_max=40):
    return probe.get("j_min", j_min), probe.get("j_max", j_max)


def _probe_b_rows(cfg):
    gen = build_generator(cfg)
    probe = cfg.section("probe")
    y = np.asarray(probe["target"], dtype=float)
    j_min, j_max = _grid(probe)
    rng = np.random.default_rng(cfg.seed)
    kinds = probe.get("curves", ["chord"])
    kinds = [kinds] if isinstance(kinds, str) else list(kinds)
    curves = []
    for a in probe.get("anchors", []):
        curves.append(chord_curve(y, a, j_min, j_max))
    n_random = probe.get("n_anchors", 0 if "anchors" in probe else 3)
    curves += default_curves(gen, y, rng, n_random if "chord" in kinds else 0,
                             kinds, j_min, j_max)
    rep = probe_condition_b(gen, y, curves, probe.get("tol", 1e-4))
    columns = ["curve", "kind", "j", "param", "gap", "dist",
               *[f"x_{i}" for i in range(gen.dim)], "D", "inner_gap"]
    rows = []
    for c, s in enumerate(rep.samples):
        for j, (p, gap, x, d, g) in enumerate(zip(s.curve.params, s.curve.gaps, s.points,
                                                  s.divergence, s.inner_gap)):
            rows.append([c, s.curve.kind, j_min + j, float(p), float(gap),
                         float(np.linalg.norm(x - y)), *x.tolist(), float(d), float(g)])
    details = {"curves": [s.curve.label for s in rep.samples]}
    return columns, rows, details


def _evaluate_probe_b(cfg, columns, rows):
    gen = build_generator(cfg)
    tol = cfg.get("probe", "tol", 1e-4)
    ci, di, gi = (columns.index(c) for c in ("curve", "D", "inner_gap"))
    per_curve = {}
    for r in rows:
        per_curve.setdefault(int(r[ci]), ([], []))
        per_curve[int(r[ci])][0].append(r[di])
        per_curve[int(r[ci])][1].append(r[gi])
    verdicts = [curve_verdict(d, g, tol) for d, g in per_curve.values()]
    verdict = combine_verdicts(verdicts)
    finest = [d[-1] for d, _ in per_curve.values()]
    return verdict, predict_condition_b(gen), {"per-curve verdicts": verdicts,
                                               "finest divergences": finest}


def _probe_a_rows(cfg):
    gen = build_generator(cfg)
    probe = cfg.section("probe")
    rep = probe_condition_a(gen, (probe["segment_x"], probe["segment_y"]), probe["z0"],
                            probe.get("k_max", 10 ** 6), probe.get("tol", 1e-4))
    columns = ["k", "gap", "dist", *[f"x_{i}" for i in range(gen.dim)], "D", "inner_gap"]
    rows = []
    x = np.asarray(probe["segment_x"], dtype=float)
    for s in rep.samples:
        for k, gap, z, d, g in zip(s.curve.params, s.curve.gaps, s.points,
                                   s.divergence, s.inner_gap):
            rows.append([float(k), float(gap), float(np.linalg.norm(z - x)), *z.tolist(),
                         float(d), float(g)])
    return columns, rows, {}


def _evaluate_probe_a(cfg, columns, rows):
    gen = build_generator(cfg)
    probe = cfg.section("probe")
    tol = probe.get("tol", 1e-4)
    x = np.asarray(probe["segment_x"], dtype=float)
    y = np.asarray(probe["segment_y"], dtype=float)
    gap = 0.5 * (gen.value(x) + gen.value(y)) - gen.value(0.5 * (x + y))
    details = {"midpoint gap": gap}
    if gap > tol:
        verdict = HOLDS
        details["note"] = "strictly convex on the segment"
    else:
        d = [r[columns.index("D")] for r in rows]
        dist = [r[columns.index("dist")] for r in rows]
        sep = float(np.linalg.norm(0.5 * (y - x)))
        verdict = condition_a_verdict(abs(gap) <= AFFINE_TOL, sep, d, dist, tol)
    return verdict, predict_condition_a(gen), details


def _counterexample_rows(cfg):
    probe = cfg.section("probe")
    j_min, j_max = _grid(probe, 4, 30)
    r = counterexample_grid(j_min, j_max, probe.get("r_max"))
    table = disk_counterexample(r)
    js = np.arange(j_min, j_min + len(r))
    columns = ["j", "r", "gap", "theta", "x_0", "x_1", "D", "inner_gap"]
    rows = []
    for j, rr, th, x, d in zip(js, table.r, table.theta, table.points, table.divergence):
        # <grad h(x), e1 - x> reduces to -r on this curve
        rows.append([int(j), float(rr), float(1.0 - rr), float(th), float(x[0]), float(x[1]),
                     float(d), float(-rr)])
    return columns, rows, {}


def _evaluate_counterexample(cfg, columns, rows):
    d = [r[columns.index("D")] for r in rows]
    g = [r[columns.index("inner_gap")] for r in rows]
    verdict = curve_verdict(d, g, COUNTEREXAMPLE_TOL)
    return verdict, FAILS, {"final divergence": d[-1], "distance of limit from 1": abs(d[-1] - 1)}


def _blowup_rows(cfg):
    gen = build_generator(cfg)
    probe = cfg.section("probe")
    lam = probe.get("lam")
    if lam is None:
        j_min, j_max = _grid(probe, 4, 48)
        lam = 2.0 ** -np.arange(j_min, j_max + 1, dtype=float)
    rep = probe_chord_blowup(gen, probe["target"], probe["toward"], lam)
    s = rep.samples[0]
    columns = ["lam", "gap", *[f"x_{i}" for i in range(gen.dim)], "D", "inner_gap"]
    rows = [[float(p), float(p), *x.tolist(), float(d), float(g)]
            for p, x, d, g in zip(s.curve.params, s.points, s.divergence, s.inner_gap)]
    return columns, rows, {"growth exponent": rep.details["growth exponent"]}


def _evaluate_blowup(cfg, columns, rows):
    gen = build_generator(cfg)
    d = [r[columns.index("D")] for r in rows]
    predicted = HOLDS if gen.legendre_on_C and gen.continuous_on_closure else None
    return blowup_verdict(d), predicted, {"finest divergence": d[-1]}


ROWS = {
    "run": _run_rows,
    "diagnose": _run_rows,
    "probe-b": _probe_b_rows,
    "probe-a": _probe_a_rows,
    "counterexample": _counterexample_rows,
    "blowup": _blowup_rows,
}

EVALUATE = {
    "run": _evaluate_run,
    "probe-b": _evaluate_probe_b,
    "probe-a": _evaluate_probe_a,
    "counterexample": _evaluate_counterexample,
    "blowup": _evaluate_blowup,
}


def evaluate(cfg: ExperimentConfig, columns, rows):
    """``(verdict, predicted, matches, details)`` from persisted rows."""
    if cfg.kind == "diagnose":
        verdict, predicted, details, matches = _evaluate_diagnose(cfg, columns, rows)
        return verdict, predicted, matches, details
    verdict, predicted, details = EVALUATE[cfg.kind](cfg, columns, rows)
    matches = predicted is None or verdict == predicted
    return verdict, predicted, matches, details


def run_experiment(cfg: ExperimentConfig, outdir=None) -> RunRecord:
    """Run, evaluate and (when ``outdir`` is given) write record.csv and report.txt."""
    start = time.perf_counter()
    columns, rows, details = ROWS[cfg.kind](cfg)
    verdict, predicted, matches, more = evaluate(cfg, columns, rows)
    details.update(more)
    record = RunRecord(cfg, columns, rows, verdict, predicted, matches, details,
                       time.perf_counter() - start)
    outdir = outdir or cfg.outdir
    if outdir is not None:
        write_record(record, outdir)
    return record


def write_record(record: RunRecord, outdir):
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "record.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(record.to_csv())
    with open(os.path.join(outdir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(record.report())


def load_record(outdir) -> RunRecord:
    """Read a persisted record and recompute its verdict from the rows."""
    with open(os.path.join(outdir, "record.csv"), encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [[_parse_cell(c) for c in row] for row in reader]
    with open(os.path.join(outdir, "report.txt"), encoding="utf-8") as fh:
        report = fh.read()
    text = report.split(CONFIG_BEGIN + "\n", 1)[1].rsplit("\n" + CONFIG_END, 1)[0] + "\n"
    kind = next(line.split(": ", 1)[1] for line in report.splitlines()
                if line.startswith("experiment: "))
    cfg = parse_config(text, kind)
    seed_line = next(line for line in report.splitlines() if line.startswith("seed: "))
    cfg.seed = int(seed_line.split(": ", 1)[1])
    verdict, predicted, matches, details = evaluate(cfg, columns, rows)
    return RunRecord(cfg, columns, rows, verdict, predicted, matches, details)


def run_config_text(text: str, kind: str | None = None, outdir=None) -> RunRecord:
    return run_experiment(parse_config(text, kind), outdir)
