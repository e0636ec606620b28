"""Named experiments and their CSV/JSON export."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import adversary as adv
from .errors import ValidationError
from .harmonic import Schedule
from .kubilius import (
    KubiliusModel,
    char_compare,
    esseen_bound,
    esseen_grid,
    quantitative_prime_set,
    sample_model,
    truncated_omega_counts,
)
from .qlinalg import bad_prime_set, find_near_relations, gamma_vector
from .reals import BeattySpec, parse_real
from .stats import (
    beatty_omega,
    cdf_on_grid,
    coprimality_rate,
    empirical_dK,
    gaussian_mixed_moment,
    loglog,
    mixed_moment_empirical,
    multivariate_dK,
    standardize,
)
from .arith import sieve_primes

EXPERIMENTS = ("ek_single", "ek_joint", "moments", "quantitative", "kubilius", "adversary", "relations", "coprimality")
CDF_POINTS = 10**4


@dataclass
class ExperimentConfig:
    experiment: str
    N: int
    alphas: list = field(default_factory=lambda: ["sqrt:2"])
    betas: list = field(default_factory=list)
    seed: int = 0
    R: Optional[int] = None
    J: Optional[int] = None
    L: Optional[int] = None
    epsilon: Optional[float] = None
    T: Optional[int] = None
    moment_cap: int = 4
    truncated: bool = False
    levels: int = 2
    d: int = 2
    out: Optional[str] = None
    cache: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.N < 16:
            raise ValidationError(f"N must be >= 16, got {self.N}")
        if len(self.betas) > len(self.alphas):
            raise ValidationError("more --beta values than --alpha values")
        if not 0 <= self.seed < 1 << 64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        self.schedule()

    def specs(self):
        betas = list(self.betas) + ["rational:0"] * (len(self.alphas) - len(self.betas))
        return [BeattySpec(parse_real(a), parse_real(b)) for a, b in zip(self.alphas, betas)]

    def schedule(self) -> Schedule:
        return Schedule.default(self.N, R=self.R, J=self.J, L=self.L, T=self.T, epsilon=self.epsilon)

    def echo(self) -> dict:
        doc = asdict(self)
        doc.pop("out")
        doc.pop("cache")
        return doc


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row width mismatch")
        self.rows.append(list(values))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    tables: dict
    diagnostics: dict
    wall_time: float = 0.0


# experiments ------------------------------------------------------------------

def _ek_single(cfg: ExperimentConfig):
    spec = cfg.specs()[0]
    w = beatty_omega(spec, cfg.N, cfg.cache)
    sample = standardize(w, cfg.N)
    dk = empirical_dK(sample)
    summary = Table(["N", "loglog", "d_K", "mean_omega", "var_omega"])
    summary.add(cfg.N, sample.center, dk, float(w.mean()), float(w.var()))
    x, F, P = cdf_on_grid(sample, min(cfg.N, CDF_POINTS))
    curve = Table(["x", "F_emp", "Phi"], [[a, b, c] for a, b, c in zip(x.tolist(), F.tolist(), P.tolist())])
    return {"summary": summary, "cdf": curve}, {"spec": spec.to_text()}


def _omega_matrix(cfg):
    return np.stack([beatty_omega(s, cfg.N, cfg.cache) for s in cfg.specs()], axis=1)


def _ek_joint(cfg: ExperimentConfig):
    if len(cfg.alphas) < 2:
        raise ValidationError("ek_joint needs at least two --alpha values")
    W = _omega_matrix(cfg)
    sample = standardize(W, cfg.N)
    k = sample.k
    grid = 64 if k <= 2 else 16
    md = multivariate_dK(sample, grid)
    summary = Table(["N", "k", "dK_grid_lower", "dK_grid_upper", "grid"])
    summary.add(cfg.N, k, md.lower, md.upper, grid)
    moments = Table(["idx", "empirical", "gaussian"])
    for idx in _indices(k, 2):
        moments.add(",".join(map(str, idx)), mixed_moment_empirical(sample, idx), gaussian_mixed_moment(idx))
    marg = Table(["i", "d_K"])
    for i in range(k):
        marg.add(i + 1, empirical_dK(sample.column(i)))
    return {"summary": summary, "moments": moments, "marginals": marg}, {}


def _indices(k, cap):
    out = []
    for total in range(cap + 1):
        for idx in itertools.product(range(total + 1), repeat=k):
            if sum(idx) == total:
                out.append(idx)
    return out


def _gamma_for(specs, schedule: Schedule):
    alphas = [s.alpha for s in specs]
    # any k reals admit relations of height J within J^-k (Dirichlet), so stay below that
    tol = min(Fraction(1, math.ceil(schedule.N ** 0.25)), Fraction(1, schedule.J ** (len(alphas) + 1)))
    rel = find_near_relations(alphas, schedule.J, tol)
    gv = gamma_vector(rel, alphas, schedule.J)
    return rel, gv


def _moments(cfg: ExperimentConfig):
    specs = cfg.specs()
    W = _omega_matrix(cfg)
    sample = standardize(W, cfg.N)
    k = sample.k
    diag = {}
    cols = ["idx", "empirical", "gaussian"]
    trunc = None
    if cfg.truncated:
        sched = cfg.schedule()
        _, gv = _gamma_for(specs, sched)
        bad = set(bad_prime_set(gv, cfg.N))
        primes = [p for p in sieve_primes(sched.R).tolist() if p not in bad]
        ll = loglog(cfg.N)
        s = sum(1.0 / p for p in primes)
        trunc = np.stack([(truncated_omega_counts(sp, cfg.N, primes) - s) / math.sqrt(ll) for sp in specs], axis=1)
        cols.append("truncated")
        diag["gamma"] = [str(g) for g in gv.gammas]
        diag["good_primes"] = len(primes)
    table = Table(cols)
    for idx in _indices(k, cfg.moment_cap):
        row = [",".join(map(str, idx)), mixed_moment_empirical(sample, idx), gaussian_mixed_moment(idx)]
        if trunc is not None:
            row.append(mixed_moment_empirical(trunc, idx))
        table.add(*row)
    return {"moments": table}, diag


def _quantitative(cfg: ExperimentConfig):
    spec = cfg.specs()[0]
    ladder = Table(["N", "d_K", "loglog"])
    n = 1000
    sizes = []
    while n < cfg.N:
        sizes.append(n)
        n *= 10
    sizes.append(cfg.N)
    w_full = beatty_omega(spec, cfg.N, cfg.cache)
    for size in sizes:
        ladder.add(size, empirical_dK(standardize(w_full[:size], size)), loglog(size))
    qp = quantitative_prime_set(spec.alpha, cfg.N, cfg.R)
    model = KubiliusModel(qp.primes, cfg.seed)
    draws = sample_model(model, min(cfg.N, 10**5))
    root = math.sqrt(model.s)
    A = root / 3
    grid = esseen_grid(A)
    bound = esseen_bound(list(zip(grid.tolist(), _char(model, grid))), A)
    model_dk = empirical_dK((draws - model.s) / root)
    counts = truncated_omega_counts(spec, cfg.N, qp.primes)
    comp = char_compare(model, counts, np.linspace(-0.01, 0.01, 21))
    kub = Table(["s", "primes", "R", "gamma", "esseen_bound", "model_dK", "truncated_dK", "char_sup_diff"])
    kub.add(model.s, len(qp.primes), qp.R, qp.gamma, bound, model_dk,
            empirical_dK((counts - model.s) / root), comp.sup)
    char = Table(["t", "exact_re", "exact_im", "emp_re", "emp_im", "diff"],
                 [list(r.values()) for r in comp.rows()])
    return {"ladder": ladder, "kubilius": kub, "char": char}, {"bad_primes": list(qp.bad)}


def _char(model, grid):
    from .kubilius import char_exact
    return char_exact(model, grid, standardized=True).tolist()


def _kubilius(cfg: ExperimentConfig):
    R = cfg.R or 1000
    model = KubiliusModel.up_to(R, cfg.seed)
    draws = sample_model(model, cfg.N)
    root = math.sqrt(model.s)
    A = root / 3
    grid = esseen_grid(A)
    bound = esseen_bound(list(zip(grid.tolist(), _char(model, grid))), A)
    summary = Table(["R", "primes", "s", "count", "mean", "var", "d_K", "esseen_bound"])
    summary.add(R, len(model.primes), model.s, cfg.N, float(draws.mean()), float(draws.var()),
                empirical_dK((draws - model.s) / root), bound)
    comp = char_compare(model, draws, np.linspace(-1.0, 1.0, 201))
    char = Table(["t", "exact_re", "exact_im", "emp_re", "emp_im", "diff"], [list(r.values()) for r in comp.rows()])
    return {"summary": summary, "char": char}, {"char_sup_diff": comp.sup}


def _adversary(cfg: ExperimentConfig):
    sched = adv.construct_sequence(cfg.d, cfg.levels)
    levels = Table(["m", "a", "b", "N", "alpha"])
    for i, lv in enumerate(sched.levels, 1):
        levels.add(i, lv.a, lv.b, lv.N, lv.alpha)
    report = Table(["m", "checked", "collapse_passed", "N", "d_K", "mass_shift", "gaussian_tail", "bound"])
    for m in range(1, len(sched.levels)):
        c = adv.collapse_check(sched, m)
        o = adv.adversary_experiment(sched, m)
        report.add(m, c.checked, c.passed, o.N, o.empirical_dK, o.mass_shift, o.gaussian_tail, o.bound)
    return {"levels": levels, "report": report}, {"schedule": sched.to_json()}


def _relations(cfg: ExperimentConfig):
    specs = cfg.specs()
    sched = cfg.schedule()
    rel, gv = _gamma_for(specs, sched)
    k = len(specs)
    rt = Table([f"m{i + 1}" for i in range(k)] + ["m"], [list(t) for t in rel.tuples])
    gt = Table(["i", "gamma", "alpha", "difference"])
    for i, (g, s) in enumerate(zip(gv.gammas, specs), 1):
        gt.add(i, g, float(s.alpha), float(g) - float(s.alpha))
    bad = Table(["p"], [[p] for p in bad_prime_set(gv, cfg.N)])
    return {"relations": rt, "gamma": gt, "bad_primes": bad}, {"relation_set": rel.to_json(), "schedule": sched.to_json()}


def _coprimality(cfg: ExperimentConfig):
    t = Table(["alpha", "N", "rate", "coprime", "counted", "excluded_zero", "reference"])
    for a in cfg.alphas:
        r = coprimality_rate(a, cfg.N)
        t.add(a, cfg.N, r.rate, r.coprime, r.counted, r.excluded_zero, 6 / math.pi**2)
    return {"coprimality": t}, {}


_DISPATCH = {
    "ek_single": _ek_single,
    "ek_joint": _ek_joint,
    "moments": _moments,
    "quantitative": _quantitative,
    "kubilius": _kubilius,
    "adversary": _adversary,
    "relations": _relations,
    "coprimality": _coprimality,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    t0 = time.perf_counter()
    tables, diag = _DISPATCH[cfg.experiment](cfg)
    return ExperimentResult(config=cfg, tables=tables, diagnostics=diag, wall_time=time.perf_counter() - t0)


# export --------------------------------------------------------------------------

def _json_value(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def _csv_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % v
    return str(v)


def to_json_text(result: ExperimentResult) -> str:
    doc = {
        "config": _json_value(result.config.echo()),
        "tables": {name: {"columns": t.columns, "rows": _json_value(t.rows)} for name, t in result.tables.items()},
        "diagnostics": _json_value(result.diagnostics),
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def to_csv_text(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_csv_value(v) for v in row])
    return buf.getvalue()


def export_results(result: ExperimentResult, path, fmt: str = "json") -> list:
    """Write the result; CSV writes one file per table named <stem>_<table>.csv."""
    path = Path(path)
    if fmt == "json":
        _write(path, to_json_text(result))
        return [path]
    if fmt == "csv":
        stem = path.with_suffix("") if path.suffix == ".csv" else path
        written = []
        for name, table in result.tables.items():
            p = stem.parent / f"{stem.name}_{name}.csv"
            _write(p, to_csv_text(table))
            written.append(p)
        return written
    raise ValidationError(f"unknown format {fmt!r}")


def _write(path: Path, text: str):
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())
