"""Command-line driver for solves, solvability checks and parameter sweeps.

Configuration is an INI file with the sections ``[domain]``, ``[problem]``,
``[solver]``, ``[output]`` and ``[orlicz]``::

    [domain]
    kind = rectangle        ; interval | rectangle | file
    nx = 16
    ny = 16
    b = 1

    [problem]
    p = 2
    q = 2
    rho = 1
    mode = resonant         ; resonant | perturbed
    alpha1 = arctan
    alpha2 = zero
    f = constant:1.0        ; constant:V | table:v1 v2 ... | file:PATH | random:AMP
    g = constant:0.0

    [solver]
    tol = 1e-8
    max_iter = 5000

Nonlinearities are a registry name followed by ``key=value`` parameters,
for example ``power c=1 r=2`` or ``custom-table path=alpha.csv``. Relative
paths are resolved against the directory of the configuration file.
"""
from __future__ import annotations

import argparse
import configparser
import io
import logging
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import domain as dmod
from .csvio import write_csv
from .errors import ConfigError, WentzellError
from .forms import Mode, ProblemSpec
from .orlicz import (
    NFunction, check_delta2, check_nabla2_from_delta2, legendre_defect, make_nfunction, young_gap,
)

log = logging.getLogger("wentzell")

EXIT_OK = 0
EXIT_CONFIG = 1

ALLOWED_KEYS = {
    "domain": {"kind", "n_cells", "length", "b_left", "b_right", "nx", "ny", "lx", "ly", "b", "path"},
    "problem": {"p", "q", "rho", "mode", "alpha1", "alpha2", "f", "g", "multipliers", "share",
                "epsilons", "df", "dg", "p1", "q1"},
    "solver": {"tol", "max_iter", "ceiling", "seed"},
    "output": {"csv", "verbosity"},
    "orlicz": {"name", "t_min", "t_max", "n_points"},
}


# ---------------------------------------------------------------------------
# configuration

def _line_index(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    index, section = {}, None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            index[(section, None)] = lineno
        elif section is not None and raw[:1] not in " \t":
            key = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            index[(section, key)] = lineno
    return index


class Config:
    """Parsed INI text with line-aware typed accessors."""

    def __init__(self, text: str, base_dir: Path = Path(".")):
        self.base_dir = base_dir
        self.lines = _line_index(text)
        self.parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
        try:
            self.parser.read_string(text)
        except configparser.ParsingError as exc:
            lineno = exc.errors[0][0] if exc.errors else None
            raise ConfigError("malformed line", lineno) from None
        except configparser.Error as exc:
            raise ConfigError(exc.message.splitlines()[0], getattr(exc, "lineno", None)) from None
        for section in self.parser.sections():
            if section not in ALLOWED_KEYS:
                raise ConfigError(f"unknown section [{section}]", self.lines.get((section, None)))
            for key in self.parser[section]:
                if key not in ALLOWED_KEYS[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]", self.line(section, key))

    @classmethod
    def from_path(cls, path) -> Config:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        return cls(text, Path(path).resolve().parent)

    def line(self, section, key=None):
        return self.lines.get((section, key), self.lines.get((section, None)))

    def has(self, section, key) -> bool:
        return self.parser.has_option(section, key)

    def raw(self, section, key, default=None):
        if self.has(section, key):
            return self.parser.get(section, key).strip()
        if default is None:
            raise ConfigError(f"missing [{section}] {key}", self.line(section))
        return default

    def number(self, section, key, default=None, kind=float, check=None, what=""):
        text = self.raw(section, key, None if default is None else str(default))
        try:
            value = kind(text) if kind is float else kind(float(text))
            if kind is int and float(text) != int(float(text)):
                raise ValueError
        except ValueError:
            raise ConfigError(f"[{section}] {key}: expected a number, got {text!r}", self.line(section, key)) from None
        if not math.isfinite(value) or (check is not None and not check(value)):
            raise ConfigError(f"[{section}] {key} = {text}: must be {what}", self.line(section, key))
        return value

    def numbers(self, section, key):
        text = self.raw(section, key)
        try:
            vals = [float(v) for v in re.split(r"[\s,]+", text) if v]
        except ValueError:
            raise ConfigError(f"[{section}] {key}: expected a list of numbers", self.line(section, key)) from None
        if not vals:
            raise ConfigError(f"[{section}] {key}: empty list", self.line(section, key))
        return vals

    def path(self, text) -> Path:
        p = Path(text)
        return p if p.is_absolute() else self.base_dir / p


@dataclass
class RunConfig:
    """Everything a subcommand needs, built from a :class:`Config`."""

    cfg: Config
    domain: dmod.DiscreteDomain
    spec: ProblemSpec | None
    tol: float
    max_iter: int
    ceiling: float
    seed: int
    csv_path: str | None
    verbosity: int
    extras: dict = field(default_factory=dict)


def _build_domain(cfg: Config) -> dmod.DiscreteDomain:
    kind = cfg.raw("domain", "kind", "rectangle").lower()
    pos = dict(check=lambda v: v > 0, what="positive")
    try:
        if kind == "interval":
            return dmod.build_interval(
                cfg.number("domain", "n_cells", 32, int, lambda v: v >= 2, "an integer >= 2"),
                cfg.number("domain", "length", 1.0, **pos),
                cfg.number("domain", "b_left", 1.0, **pos),
                cfg.number("domain", "b_right", 1.0, **pos))
        if kind == "rectangle":
            return dmod.build_rectangle(
                cfg.number("domain", "nx", 16, int, lambda v: v >= 2, "an integer >= 2"),
                cfg.number("domain", "ny", 16, int, lambda v: v >= 2, "an integer >= 2"),
                cfg.number("domain", "lx", 1.0, **pos),
                cfg.number("domain", "ly", 1.0, **pos),
                cfg.number("domain", "b", 1.0, **pos))
        if kind == "file":
            with open(cfg.path(cfg.raw("domain", "path"))) as fh:
                return dmod.load_mesh(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read mesh: {exc}", cfg.line("domain", "path")) from None
    except ConfigError:
        raise
    except WentzellError as exc:
        raise ConfigError(str(exc), cfg.line("domain")) from None
    raise ConfigError(f"unknown domain kind {kind!r}", cfg.line("domain", "kind"))


def parse_nonlinearity(cfg: Config, section: str, key: str, default: str = "zero") -> NFunction:
    text = cfg.raw(section, key, default)
    name, *args = text.split()
    params = {}
    for arg in args:
        k, sep, v = arg.partition("=")
        if not sep:
            raise ConfigError(f"[{section}] {key}: parameter {arg!r} is not key=value", cfg.line(section, key))
        if k == "path":
            params[k] = str(cfg.path(v))
        else:
            try:
                params[k] = float(v)
            except ValueError:
                raise ConfigError(f"[{section}] {key}: {k} must be numeric", cfg.line(section, key)) from None
    try:
        return make_nfunction(name, **params)
    except (WentzellError, OSError) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}", cfg.line(section, key)) from None


def parse_data(cfg: Config, section: str, key: str, n: int, rng: np.random.Generator,
               default: str = "constant:0") -> np.ndarray:
    """Nodal data from ``constant:V``, ``table:v1 v2 ...``, ``file:PATH`` or ``random:AMP``."""
    text = cfg.raw(section, key, default)
    kind, sep, arg = text.partition(":")
    lineno = cfg.line(section, key)
    kind = kind.strip().lower()
    try:
        if not sep:
            raise ValueError
        if kind == "constant":
            values = np.full(n, float(arg))
        elif kind == "table":
            values = np.array([float(v) for v in re.split(r"[\s,]+", arg.strip()) if v])
        elif kind == "file":
            values = np.atleast_1d(np.loadtxt(cfg.path(arg.strip()), dtype=float, delimiter=None))
        elif kind == "random":
            amp = float(arg)
            values = rng.uniform(-amp, amp, n)
        else:
            raise ConfigError(f"[{section}] {key}: unknown data kind {kind!r}", lineno)
    except OSError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}", lineno) from None
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {text!r}", lineno) from None
    if values.shape != (n,):
        raise ConfigError(f"[{section}] {key}: expected {n} values, got {values.size}", lineno)
    if not np.all(np.isfinite(values)):
        raise ConfigError(f"[{section}] {key}: non-finite values", lineno)
    return values


def build_run(cfg: Config, seed_override: int | None = None, need_problem: bool = True) -> RunConfig:
    dom = _build_domain(cfg)
    seed = seed_override if seed_override is not None else cfg.number("solver", "seed", 0, int)
    rng = np.random.default_rng(seed)
    spec = None
    if need_problem:
        mode = cfg.raw("problem", "mode", "resonant").lower()
        if mode not in ("resonant", "perturbed"):
            raise ConfigError(f"unknown mode {mode!r}", cfg.line("problem", "mode"))
        rho = cfg.number("problem", "rho", 1, int, lambda v: v in (0, 1), "0 or 1")
        p = cfg.number("problem", "p", 2.0, check=lambda v: v > 1, what="> 1")
        q = cfg.number("problem", "q", 2.0, check=lambda v: v > 1, what="> 1")
        a1 = parse_nonlinearity(cfg, "problem", "alpha1")
        a2 = parse_nonlinearity(cfg, "problem", "alpha2")
        f = parse_data(cfg, "problem", "f", dom.n_nodes, rng)
        g = parse_data(cfg, "problem", "g", dom.n_boundary, rng)
        try:
            spec = ProblemSpec(dom, p=p, q=q, rho=rho, mode=Mode(mode), alpha1=a1, alpha2=a2, f=f, g=g)
        except WentzellError as exc:
            raise ConfigError(str(exc), cfg.line("problem")) from None
    return RunConfig(
        cfg=cfg, domain=dom, spec=spec,
        tol=cfg.number("solver", "tol", 1e-8, check=lambda v: v > 0, what="positive"),
        max_iter=cfg.number("solver", "max_iter", 5000, int, lambda v: v >= 0, "nonnegative"),
        ceiling=cfg.number("solver", "ceiling", 1e6, check=lambda v: v > 0, what="positive"),
        seed=seed,
        csv_path=cfg.raw("output", "csv", "") or None,
        verbosity=cfg.number("output", "verbosity", 1, int),
        extras={"rng": rng},
    )


# ---------------------------------------------------------------------------
# helpers

def worker_count(n_tasks: int) -> int:
    """Thread count for sweeps: ``min(cpu count, WENTZELL_THREADS, n_tasks)``."""
    cap = os.cpu_count() or 1
    env = os.environ.get("WENTZELL_THREADS")
    if env:
        try:
            cap = min(cap, max(1, int(env)))
        except ValueError:
            log.warning("ignoring non-integer WENTZELL_THREADS=%r", env)
    return max(1, min(cap, n_tasks))


class Output:
    """Destination for CSV text: a file, or stdout unless quiet."""

    def __init__(self, path: str | None, quiet: bool):
        self.path, self.quiet = path, quiet

    def emit(self, header, rows, path: str | None = None):
        buf = io.StringIO()
        write_csv(buf, header, rows)
        target = path or self.path
        if target:
            with open(target, "w", newline="") as fh:
                fh.write(buf.getvalue())
        elif not self.quiet:
            sys.stdout.write(buf.getvalue())


def _solver_options(run: RunConfig):
    from .solver import SolverOptions
    return SolverOptions(tol=run.tol, max_iter=run.max_iter, ceiling=run.ceiling)


# ---------------------------------------------------------------------------
# subcommands

def cmd_solve(run: RunConfig, out: Output) -> int:
    from .solver import Verdict, solve_perturbed, solve_resonant

    spec, opts = run.spec, _solver_options(run)
    if spec.mode is Mode.PERTURBED:
        rep = solve_perturbed(spec, run.tol, run.max_iter, options=opts)
    else:
        rep = solve_resonant(spec, run.tol, run.max_iter, options=opts)
    coords = ["x", "y"][: spec.domain.dim]
    sol_rows = [(*map(float, xy), float(v)) for xy, v in zip(spec.domain.nodes, rep.iterate.values)]
    report = [(rep.verdict.value, rep.iterations, rep.final_residual_inf, rep.final_energy, rep.note)]
    header = ("verdict", "iterations", "final_residual_inf", "final_energy", "note")
    if out.path:
        out.emit((*coords, "value"), sol_rows)
        stem = out.path[:-4] if out.path.endswith(".csv") else out.path
        out.emit(header, report, f"{stem}.report.csv")
    else:
        out.emit(header, report)
    log.info("solve: %s after %d iterations, residual %.3g", rep.verdict.value, rep.iterations,
             rep.final_residual_inf)
    return {Verdict.CONVERGED: 0, Verdict.DIVERGED: 2, Verdict.MAX_ITERATIONS: 3}[rep.verdict]


def cmd_check_solvability(run: RunConfig, out: Output) -> int:
    from .resonance import VERDICT_CSV_HEADER, Classification, solvability

    if run.spec.mode is not Mode.RESONANT:
        raise ConfigError("check-solvability needs mode = resonant", run.cfg.line("problem", "mode"))
    v = solvability(run.spec)
    out.emit(VERDICT_CSV_HEADER, [v.csv_row()])
    log.info("solvability: mean %.6g vs interval [%.6g, %.6g]: %s", v.mean_total, v.interval.lo,
             v.interval.hi, v.classification.value)
    return {Classification.STRICTLY_SOLVABLE: 0, Classification.UNSOLVABLE: 2,
            Classification.BOUNDARY_CASE: 4}[v.classification]


def _orlicz_grid(cfg: Config, nf: NFunction) -> np.ndarray:
    t_max_default = nf.params.get("t_max")
    if t_max_default is not None:
        hi = 0.5 * t_max_default  # keep 2t inside the table
        lo = hi * 1e-6
    else:
        lo, hi = 1e-6, 1e6
    lo = cfg.number("orlicz", "t_min", lo, check=lambda v: v > 0, what="positive")
    hi = cfg.number("orlicz", "t_max", hi, check=lambda v: v > lo, what="greater than t_min")
    n = cfg.number("orlicz", "n_points", 241, int, lambda v: v >= 2, "an integer >= 2")
    return np.geomspace(lo, hi, n)


def orlicz_rows(nf: NFunction, grid: np.ndarray, tol: float = 1e-8) -> list[tuple]:
    """Rows ``(check, value, passed)`` for the growth conditions and Young's inequality."""
    rows = []
    d2 = check_delta2(nf, grid)
    rows.append(("delta2", d2.constant, d2.satisfied))
    if nf.delta2_constant is not None:
        rows.append(("delta2_declared", float(nf.delta2_constant),
                     d2.constant <= nf.delta2_constant * (1 + 1e-12)))
    c2 = nf.delta2_constant if nf.delta2_constant is not None else (d2.constant if d2.satisfied else None)
    if c2 is not None:
        n2 = check_nabla2_from_delta2(nf, grid, c2)
        rows.append(("nabla2_from_delta2", n2.c_used, n2.holds))
    s = np.concatenate([-grid[::8], grid[::8]])
    a = np.asarray(nf.alpha(s), dtype=float)
    tt = np.concatenate([-a, a, s])
    S, T = np.meshgrid(s, tt[np.isfinite(tt)])
    with np.errstate(over="ignore", invalid="ignore"):
        gap = young_gap(nf, S, T)
        scale = np.maximum(1.0, np.abs(S * T))
        worst = float(np.nanmin(gap / scale))
        defect = np.abs(legendre_defect(nf, s)) / np.maximum(1.0, np.abs(s * a))
    worst_eq = float(np.nanmax(defect))
    rows.append(("young_min_gap", worst, worst >= -tol))
    rows.append(("young_equality_defect", worst_eq, worst_eq <= tol))
    return rows


def cmd_orlicz_check(run: RunConfig, out: Output) -> int:
    cfg = run.cfg
    section, key = ("orlicz", "name") if cfg.has("orlicz", "name") else ("problem", "alpha1")
    nf = parse_nonlinearity(cfg, section, key, "power c=1 r=2")
    rows = orlicz_rows(nf, _orlicz_grid(cfg, nf))
    out.emit(("check", "value", "passed"), [(c, float(v), int(ok)) for c, v, ok in rows])
    for c, v, ok in rows:
        log.info("%s: %.6g %s", c, v, "ok" if ok else "FAILED")
    return 0 if all(ok for _, _, ok in rows) else 2


def cmd_threshold_sweep(run: RunConfig, out: Output) -> int:
    from .resonance import SWEEP_CSV_HEADER, threshold_sweep

    if run.spec.mode is not Mode.RESONANT:
        raise ConfigError("threshold-sweep needs mode = resonant", run.cfg.line("problem", "mode"))
    mults = run.cfg.numbers("problem", "multipliers")
    share = run.cfg.number("problem", "share", 0.5, check=lambda v: 0 <= v <= 1, what="in [0, 1]")
    rows = threshold_sweep(run.spec, mults, run.tol, run.max_iter, share, worker_count(len(mults)),
                           options=_solver_options(run))
    out.emit(SWEEP_CSV_HEADER, rows)
    return 0


def cmd_stability_sweep(run: RunConfig, out: Output) -> int:
    from .estimates import STABILITY_CSV_HEADER, c_fit_bounded, stability_sweep

    cfg, spec = run.cfg, run.spec
    if spec.mode is not Mode.PERTURBED:
        raise ConfigError("stability-sweep needs mode = perturbed", cfg.line("problem", "mode"))
    eps = cfg.numbers("problem", "epsilons")
    rng = run.extras["rng"]
    df = parse_data(cfg, "problem", "df", spec.domain.n_nodes, rng, "constant:1")
    dg = parse_data(cfg, "problem", "dg", spec.domain.n_boundary, rng, "constant:0")
    p1 = cfg.number("problem", "p1", 2.0, check=lambda v: v >= 1, what=">= 1")
    q1 = cfg.number("problem", "q1", 2.0, check=lambda v: v >= 1, what=">= 1")
    try:
        rows = stability_sweep(spec, df, dg, eps, p1, q1, run.tol, run.max_iter, worker_count(len(eps)))
    except WentzellError as exc:
        raise ConfigError(str(exc), cfg.line("problem")) from None
    out.emit(STABILITY_CSV_HEADER, rows)
    ok = c_fit_bounded([r[-1] for r in rows])
    log.info("stability sweep: C_fit %s", "bounded" if ok else "drifts")
    return 0 if ok else 2


def cmd_mesh_dump(run: RunConfig, out: Output) -> int:
    buf = io.StringIO()
    dmod.dump_mesh(run.domain, buf)
    if out.path:
        Path(out.path).write_text(buf.getvalue())
    elif not out.quiet:
        sys.stdout.write(buf.getvalue())
    return 0


COMMANDS = {
    "solve": (cmd_solve, True),
    "check-solvability": (cmd_check_solvability, True),
    "orlicz-check": (cmd_orlicz_check, False),
    "threshold-sweep": (cmd_threshold_sweep, True),
    "stability-sweep": (cmd_stability_sweep, True),
    "mesh-dump": (cmd_mesh_dump, False),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="INI configuration file")
    common.add_argument("--out", metavar="PATH", help="CSV output path (default: [output] csv, else stdout)")
    common.add_argument("--seed", type=int, help="seed for random: data (overrides [solver] seed)")
    common.add_argument("--quiet", action="store_true", help="no log messages and no stdout CSV")
    parser = argparse.ArgumentParser(prog="wentzell", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    func, need_problem = COMMANDS[args.command]
    try:
        cfg = Config.from_path(args.config)
        run = build_run(cfg, args.seed, need_problem)
        level = logging.WARNING if args.quiet or run.verbosity <= 0 else logging.INFO
        logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)
        out = Output(args.out or run.csv_path, args.quiet)
        return func(run, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
