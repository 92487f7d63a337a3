"""Command-line front end.

Subcommands: ``split``, ``audit``, ``reduce``, ``chart``, ``bvp`` and
``report``. Settings come from an optional flat ``key=value`` file
(``--config``) and are overridden by flags. Exit status is 0 when
everything passes, 2 when a hypothesis audit fails (artifacts are still
written) and 1 on errors.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import bvp as bvp_mod
from . import normal_form as nf
from . import reduction as red
from .errors import ConfigParse, HypothesisViolation, IoFailure, MorseInfinityError, ScenarioMismatch
from .functional import (
    ConditionResult,
    audit_D_infty,
    audit_gradient,
    audit_hessian,
    estimate_contraction,
)
from .hilbert import operator_constants, spectral_split
from .models import MODELS, get_model
from .report import RunResults, artifact_header, emit_report, fmt

__all__ = ["RunConfig", "parse_config", "load_config", "run", "main"]

COMMANDS = ("split", "audit", "reduce", "chart", "bvp", "report")
NONLINEARITIES = ("default", "zero", "custom-table", "interpolating", "sine")

# Per-problem defaults for knobs left unset.
MODEL_KNOBS = {"trig": (10.0, 1.0), "trig_decay": (10.0, 1.0)}
BVP_KNOBS = (2.0, 50.0)


@dataclass
class RunConfig:
    """Flat run configuration (every field may come from file or flag)."""

    command: str = "split"
    model: str = "trig"
    modes: int = 8
    quad_nodes: int | None = None
    a0: float | None = None
    a: float = 1.0
    nonlinearity: str = "default"
    table: str | None = None
    scenario: str = "direct"
    starts: int = 64
    seed: int = 0
    zero_tol: float = 1e-9
    fp_tol: float = 1e-10
    kappa: float | None = None
    trial_rho: float | None = None
    R1: float | None = None
    samples: int = 50
    points: int = 50
    nondegenerate: bool = False
    csv: str | None = None
    report: str | None = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigParse(f"unknown command {self.command!r}")
        if self.model != "bvp" and self.model not in MODELS:
            raise ConfigParse(f"unknown model {self.model!r}; choose from {sorted(MODELS) + ['bvp']}")
        for name in ("zero_tol", "fp_tol"):
            if not getattr(self, name) > 0:
                raise ConfigParse(f"{name} must be > 0")
        for name in ("trial_rho", "R1"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigParse(f"{name} must be > 0")
        if self.kappa is not None and not self.kappa > 1:
            raise ConfigParse("kappa must be > 1")
        for name in ("samples", "points"):
            if getattr(self, name) <= 0:
                raise ConfigParse(f"{name} must be a positive integer")
        if self.starts < 0:
            raise ConfigParse("starts must be >= 0")
        if self.modes < 2:
            raise ConfigParse("modes must be >= 2")
        if self.quad_nodes is not None and self.quad_nodes < 4 * self.modes:
            raise ConfigParse(f"quad_nodes must be >= 4 * modes = {4 * self.modes}")
        if self.nonlinearity not in NONLINEARITIES:
            raise ConfigParse(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.nonlinearity == "custom-table" and not self.table:
            raise ConfigParse("custom-table nonlinearity needs table=<path>")
        if self.scenario not in bvp_mod.SCENARIOS:
            raise ConfigParse(f"unknown scenario {self.scenario!r}")
        return self

    def echo(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_ALIASES = {"r1": "R1"}


def _key(raw: str) -> str:
    k = raw.strip().replace("-", "_")
    return _ALIASES.get(k, k)


def _convert(name: str, text: str):
    kind = _FIELD_TYPES[name]
    if "bool" in kind:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(text)
    if "int" in kind:
        return int(text)
    if "float" in kind:
        return float(text)
    return text


def parse_config(text: str) -> dict:
    """Parse ``key=value`` lines (``#`` comments) into typed settings.

    Raises:
        ConfigParse: With 1-based line and column of the offending token.
    """
    out = {}
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        body = raw.split("#", 1)[0].rstrip("\r\n")
        if not body.strip():
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise ConfigParse("expected key=value", lineno, col)
        k_raw, v_raw = body.split("=", 1)
        key = _key(k_raw)
        kcol = len(k_raw) - len(k_raw.lstrip()) + 1
        if key not in _FIELD_TYPES:
            raise ConfigParse(f"unknown key {k_raw.strip()!r}", lineno, kcol)
        value = v_raw.strip()
        vcol = len(k_raw) + 2 + (len(v_raw) - len(v_raw.lstrip()))
        try:
            out[key] = _convert(key, value)
        except ValueError:
            raise ConfigParse(f"bad value {value!r} for {key}", lineno, vcol) from None
    return out


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise IoFailure(f"cannot read config {path!s}: {exc}") from exc


# -- problem loading ----------------------------------------------------------


def _nonlinearity(cfg: RunConfig):
    a = cfg.a
    if cfg.nonlinearity == "zero":
        return bvp_mod.zero_nonlinearity(a)
    if cfg.nonlinearity == "custom-table":
        return bvp_mod.table_nonlinearity(cfg.table, a)
    if cfg.nonlinearity == "sine":
        return bvp_mod.sine_nonlinearity(a)
    if cfg.nonlinearity == "interpolating" or (cfg.nonlinearity == "default" and cfg.a0 is not None):
        return bvp_mod.interpolating_nonlinearity(cfg.a0 if cfg.a0 is not None else a, a)
    return bvp_mod.default_nonlinearity(a)


def _galerkin(cfg: RunConfig):
    return bvp_mod.GalerkinBVP(cfg.modes, _nonlinearity(cfg), quad_nodes=cfg.quad_nodes or 0)


def _problem(cfg: RunConfig):
    if cfg.model == "bvp" or cfg.command == "bvp":
        return bvp_mod.assemble_problem(_galerkin(cfg))
    return get_model(cfg.model)


def _knobs(cfg: RunConfig, problem):
    if cfg.model == "bvp" or cfg.command == "bvp":
        kappa, rho = BVP_KNOBS
    else:
        kappa, rho = MODEL_KNOBS.get(cfg.model, (10.0, 1.0))
    kappa = cfg.kappa if cfg.kappa is not None else kappa
    rho = cfg.trial_rho if cfg.trial_rho is not None else rho
    R1 = cfg.R1 if cfg.R1 is not None else problem.infinity_radius
    return kappa, rho, R1


def _solver(cfg: RunConfig, problem, split, consts):
    kappa, rho, R1 = _knobs(cfg, problem)
    cdata = estimate_contraction(problem, split, consts, kappa, rho, R1, samples=4 * cfg.samples, seed=cfg.seed)
    return red.ReductionSolver(problem, split, consts, cdata, fp_tol=cfg.fp_tol)


# -- stages -------------------------------------------------------------------


class _Out:
    def __init__(self, stream):
        self.stream = stream

    def kv(self, key, value):
        self.stream.write(f"{key}={fmt(value)}\n")

    def line(self, text=""):
        self.stream.write(text + "\n")


def _stage_split(cfg, problem, res: RunResults, out: _Out):
    split = spectral_split(problem.B_inf, cfg.zero_tol)
    out.kv("nu", split.nu)
    out.kv("mu", split.mu)
    out.kv("a_infty", split.a_infty)
    res.constants.append(("nu", split.nu, f"zero_tol {fmt(cfg.zero_tol)}"))
    res.constants.append(("mu", split.mu, f"zero_tol {fmt(cfg.zero_tol)}"))
    res.constants.append(("a_infty", split.a_infty, "min |eigenvalue|/2 off the kernel"))
    if split.dim > split.nu:
        consts = operator_constants(problem.B_inf, split)
        out.kv("C1_infty", consts.c1_infty)
        out.kv("C2_infty", consts.c2_infty)
        res.constants.append(("C1_infty", consts.c1_infty, "direct from eigenvalues"))
        res.constants.append(("C2_infty", consts.c2_infty, "projection norm"))
        return split, consts
    return split, None


def _stage_audit(cfg, problem, split, consts, res: RunResults, out: _Out):
    rep = audit_gradient(problem, cfg.samples, cfg.seed).merged(audit_hessian(problem, cfg.samples, cfg.seed))
    if split.nu:
        _, _, R1 = _knobs(cfg, problem)
        radii = [R1 * 10.0**k for k in range(4)]
        rep = rep.merged(audit_D_infty(problem, split, radii, seed=cfg.seed))
    entries = list(rep.entries)
    if split.nu:
        kappa, rho, R1 = _knobs(cfg, problem)
        try:
            cd = estimate_contraction(problem, split, consts, kappa, rho, R1, 4 * cfg.samples, cfg.seed)
            entries.append(ConditionResult("contraction", True, None, cd.max_ratio, cd.samples,
                                           1.0 / (kappa * consts.c1_infty), {"M_A": cd.M_A}))
        except MorseInfinityError as exc:
            entries.append(ConditionResult("contraction", False, None, getattr(exc, "ratio", math.nan),
                                           4 * cfg.samples, 1.0 / (kappa * consts.c1_infty),
                                           {"error": str(exc)}))
    for e in entries:
        out.line(f"{e.name}: {'pass' if e.passed else 'FAIL'} worst={fmt(e.worst_value)} tol={fmt(e.tolerance)}")
    res.audits.extend(entries)


def _stage_reduce(cfg, problem, split, consts, res: RunResults, out: _Out, csv_rows: list):
    if split.nu == 0:
        raise HypothesisViolation("reduction needs a nontrivial kernel")
    s = _solver(cfg, problem, split, consts)
    R1 = s.cdata.R1
    rng = np.random.default_rng(cfg.seed)
    worst_res, worst_factor, iters = 0.0, 0.0, 0
    csv_rows.append("z_norm,h_norm,iterations,residual,max_factor")
    for k in range(cfg.points):
        r = R1 * (1 + 3 * k / max(cfg.points - 1, 1))
        d = s.Z @ rng.standard_normal(split.nu)
        z = d / np.linalg.norm(d) * r
        info = red.solve_h_info(s, z)
        worst_res = max(worst_res, info.residual)
        worst_factor = max(worst_factor, info.max_factor)
        iters = max(iters, info.iterations)
        csv_rows.append(",".join(fmt(v) for v in (r, np.linalg.norm(info.h), info.iterations, info.residual,
                                                   info.max_factor)))
    lip = red.lipschitz_audit(s, cfg.samples, cfg.seed) if s.cdata.mode == "E_infty" else math.nan
    lip_bound = red.lipschitz_bound(s.cdata)
    decay = red.decay_audit(s, [R1 * 10.0**k for k in range(3)], seed=cfg.seed)
    search = red.find_reduced_critical_points(s, starts=min(cfg.starts, 32), seed=cfg.seed)
    summary = {
        "grid_points": cfg.points,
        "max_residual (fp_tol " + fmt(cfg.fp_tol) + ")": worst_res,
        "max_picard_factor (bound " + fmt(1 / s.cdata.kappa + red.FACTOR_SLACK) + ")": worst_factor,
        "max_iterations": iters,
        "lipschitz_ratio (bound " + fmt(lip_bound) + ")": lip,
        "M_A": s.cdata.M_A,
        "decay_flag": decay.flag,
        "reduced_critical_points": len(search),
        "degenerate_flat": search.degenerate_flat,
    }
    res.reduction = summary
    res.audits.append(ConditionResult("lipschitz", bool(lip <= lip_bound), None, lip, cfg.samples, lip_bound))
    res.audits.append(ConditionResult("h_decay", decay.passed, None, decay.envelope[-1], len(decay.radii), 0.0,
                                      {"flag": decay.flag}))
    for k, v in summary.items():
        out.kv(k.split(" ")[0], v if not isinstance(v, str) else v)
    return s


def _stage_chart(cfg, problem, split, consts, res: RunResults, out: _Out, csv_rows: list):
    rng = np.random.default_rng(cfg.seed)
    residuals, roundtrip = [], []
    if cfg.nondegenerate:
        chart = nf.build_nondegenerate_chart(problem, split, seed=cfg.seed)
        csv_rows.append("index,residual,lower_ok,upper_ok")
        for i in range(cfg.points):
            if split.mu == 0:
                u = rng.standard_normal(split.dim)
                u *= chart.outer_radius * rng.uniform(1, 4) / np.linalg.norm(u)
                x = nf.nondeg_chart_definite(chart, u)
                r = abs(float(problem.eval_L(x)) - float(u @ u))
                lo, hi = nf.nondeg_bounds(chart, u)
                nx = float(np.linalg.norm(x))
            else:
                up = split.basis_plus @ rng.standard_normal(split.n_plus)
                up *= chart.outer_radius * rng.uniform(1, 4) / np.linalg.norm(up)
                v = split.basis_minus @ rng.standard_normal(split.mu)
                x = nf.nondeg_chart_indefinite(chart, up, v)
                r = abs(float(problem.eval_L(x)) - (float(up @ up) - float(v @ v)))
                lo, hi = nf.nondeg_bounds(chart, up)
                nx = float(np.linalg.norm(split.basis_plus.T @ x))
            residuals.append(r)
            tol = 1e-9 * max(1.0, hi)
            csv_rows.append(f"{i},{fmt(r)},{int(nx >= lo - tol)},{int(nx <= hi + tol)}")
        res.chart = {"kind": "nondegenerate", "outer_radius": chart.outer_radius, "lam": chart.lam}
    else:
        if split.nu == 0:
            raise HypothesisViolation("no kernel: use --nondegenerate")
        s = _solver(cfg, problem, split, consts)
        chart = nf.build_chart(s, seed=cfg.seed)
        R1 = s.cdata.R1
        cap = chart.certified_target_radius
        csv_rows.append("index,z_norm,residual,roundtrip")
        for i in range(cfg.points):
            d = s.Z @ rng.standard_normal(split.nu)
            z = d / np.linalg.norm(d) * rng.uniform(R1, 4 * R1)
            scale = min(3.0, 0.9 * cap / math.sqrt(2)) if chart.finite else 3.0
            up = _ball(split.basis_plus, scale, rng)
            um = _ball(split.basis_minus, scale, rng)
            x, r = nf.phi_chart(chart, nf.ChartPoint(z, up, um))
            u, v = nf.psi_inverse(chart, z, up, um)
            w1, w2 = nf.psi(chart, z, u, v)
            rt = max(float(np.linalg.norm(w1 - up)), float(np.linalg.norm(w2 - um)))
            residuals.append(r)
            roundtrip.append(rt)
            csv_rows.append(f"{i},{fmt(np.linalg.norm(z))},{fmt(r)},{fmt(rt)}")
        signs = nf.sign_bounds_audit(chart, 100, cfg.seed)
        res.audits.extend(signs.entries)
        res.chart = {"kind": "kernel", "a1": chart.a1, "pinching_passed": chart.pinching_passed,
                     "r_cap": chart.r_cap, "max_roundtrip (tol 1e-8)": max(roundtrip)}
    res.chart.update({"points": cfg.points, "max_residual (tol 1e-8)": max(residuals),
                      "mean_residual": float(np.mean(residuals))})
    res.audits.append(ConditionResult("normal_form_identity", max(residuals) <= 1e-8, None, max(residuals),
                                      cfg.points, 1e-8))
    if roundtrip:
        res.audits.append(ConditionResult("chart_roundtrip", max(roundtrip) <= 1e-8, None, max(roundtrip),
                                          cfg.points, 1e-8))
    for k, v in res.chart.items():
        out.kv(k.split(" ")[0], v)


def _ball(basis, radius, rng):
    k = basis.shape[1]
    if k == 0:
        return np.zeros(basis.shape[0])
    c = rng.standard_normal(k)
    return basis @ (c / np.linalg.norm(c)) * radius * rng.uniform() ** (1.0 / k)


def _stage_bvp(cfg, res: RunResults, out: _Out, csv_rows: list):
    g = _galerkin(cfg)
    sp = g.spec
    md = bvp_mod.morse_data(g, sp.a)
    out.kv("nu", md.nu)
    out.kv("mu", md.mu)
    res.constants += [("nu", md.nu, "eigenvalue table"), ("mu", md.mu, "eigenvalue table"),
                      ("a0", sp.a0, "slope at 0"), ("a", sp.a, "slope at infinity")]
    lo, hi = md.index_interval
    res.notes.append(f"critical groups at infinity can be nonzero only in degrees [{lo}, {hi}]")
    if md.nu:
        c1 = bvp_mod.c1_infinity(g, sp.a)
        chk = bvp_mod.c1_cross_check(g, sp.a)
        out.kv("C1_infty", c1)
        res.constants.append(("C1_infty", c1, "direct from eigenvalues"))
        res.constants.append(("C1_infty closed form", chk.literal,
                              "published formula; differs" if chk.discrepancy else "agrees within 1e-12"))
    cond = bvp_mod.check_resonance_conditions(g, seed=cfg.seed)
    c = cond["ell_h_product_bound"].detail["c"]
    iota = cond["exponents"].detail["iota"]
    out.kv("c_Omega", c)
    out.kv("iota", iota)
    res.constants.append(("c(Omega)", c, f"restart spread {fmt(cond['ell_h_product_bound'].detail['c_spread'])}"))
    res.constants.append(("iota(s)", iota, f"s = {fmt(sp.s)}"))
    res.audits.extend(cond.entries)
    if not md.nu:
        res.informational.update({"hbar_gap_bound", "ell_h_product_bound"})
    res.audits.extend(sp.validate(seed=cfg.seed).entries)
    try:
        result = bvp_mod.solve_bvp(g, cfg.scenario, cfg.starts, cfg.seed, conditions=cond)
    except ScenarioMismatch as exc:
        res.audits.append(ConditionResult("scenario", False, None, len(exc.failed), 0, 0.0,
                                          {"failed": tuple(exc.failed)}))
        res.notes.append(str(exc))
        out.line(f"scenario: FAIL {exc}")
        res.solutions = []
        return
    res.solutions = list(result.solutions)
    res.notes += list(result.notes)
    out.kv("solutions", len(result))
    out.kv("nontrivial", len(result.nontrivial))
    body = bvp_mod.solutions_csv(result.solutions, g.n_modes)
    csv_rows.extend(body.rstrip("\n").split("\n"))


# -- entry points -------------------------------------------------------------


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute one command; returns the exit status."""
    stdout = stdout or sys.stdout
    cfg.validate()
    out = _Out(stdout)
    res = RunResults(cfg.command, cfg.echo(), cfg.seed)
    stdout.write(artifact_header(cfg.command, res.config, cfg.seed))
    csv_rows: list = []
    cmd = cfg.command
    if cmd == "bvp":
        _stage_bvp(cfg, res, out, csv_rows)
    else:
        problem = _problem(cfg)
        split, consts = _stage_split(cfg, problem, res, out)
        if cmd in ("audit", "report"):
            _stage_audit(cfg, problem, split, consts, res, out)
        if cmd == "reduce" or (cmd == "report" and split.nu):
            _stage_reduce(cfg, problem, split, consts, res, out, csv_rows if cmd == "reduce" else [])
        if cmd == "chart" or cmd == "report":
            if cmd == "report" and split.nu == 0:
                cfg.nondegenerate = True
            _stage_chart(cfg, problem, split, consts, res, out, csv_rows if cmd == "chart" else [])
        if cmd == "report" and cfg.model == "bvp":
            _stage_bvp(cfg, res, out, [])
    if cfg.csv and csv_rows:
        _write(cfg.csv, artifact_header(cmd, res.config, cfg.seed) + "\n".join(csv_rows) + "\n")
    if cfg.report or cmd == "report":
        path = cfg.report
        text = emit_report(res, path)
        if path is None:
            stdout.write(text)
    return 0 if res.audits_passed else 2


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path!s}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="morse-infinity", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value settings file (flags override it)")
        p.add_argument("--model", help=f"built-in model ({', '.join(sorted(MODELS))}) or 'bvp'")
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--zero-tol", dest="zero_tol", type=float)
        p.add_argument("--fp-tol", dest="fp_tol", type=float)
        p.add_argument("--kappa", type=float)
        p.add_argument("--trial-rho", dest="trial_rho", type=float)
        p.add_argument("--R1", "--r1", dest="R1", type=float)
        p.add_argument("--points", type=int, help="grid or sample size for reduce/chart")
        p.add_argument("--csv", help="write tabular output here")
        p.add_argument("--report", help="write a markdown report here")
        p.add_argument("--modes", type=int)
        p.add_argument("--quad-nodes", dest="quad_nodes", type=int, help="Gauss nodes (default 8 * modes)")
        p.add_argument("--a0", type=float)
        p.add_argument("--a", type=float)
        p.add_argument("--nonlinearity", choices=NONLINEARITIES)
        p.add_argument("--table", help="t q q_t Q table for custom-table")
        p.add_argument("--scenario", choices=bvp_mod.SCENARIOS)
        p.add_argument("--starts", type=int)
        p.add_argument("--nondegenerate", action="store_const", const=True, default=None)
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    merged = {}
    if args.config:
        merged.update(load_config(args.config))
    for k, v in vars(args).items():
        if k == "config" or v is None:
            continue
        merged[k] = v
    merged["command"] = args.command
    if args.command == "bvp":
        merged["model"] = "bvp"
    return RunConfig(**merged)


def main(argv=None) -> int:
    """Console entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        return run(config_from_args(args))
    except ConfigParse as exc:
        where = f" (line {exc.line}, column {exc.column})" if exc.line else ""
        sys.stderr.write(f"config error: {exc.message}{where}\n")
        return 1
    except (MorseInfinityError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
