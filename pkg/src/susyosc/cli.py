"""Batch front end.

    susyosc run      --config cfg.json --out outdir     # artifacts + checks
    susyosc build    --config cfg.json --out outdir     # CSV artifacts only
    susyosc verify   --config cfg.json --out outdir     # checks only
    susyosc spectrum --config cfg.json --out outdir     # spectrum.csv only
    susyosc sweep    --epsilon 0 --nu-min -1.5 --nu-max 1.5 --nu-step 0.1 --out outdir

Config file (JSON):

    {"grid": {"x_min": -12, "x_max": 12, "n_points": 9601},
     "factorizations": [{"epsilon": 0.0, "nu": 0.5}],
     "n_max": 8,
     "checks": ["riccati", "spectrum"],      # or "all"
     "output_dir": "out",
     "tolerances": {"spectrum": 1e-3}}

Exit codes: 0 all requested checks passed, 1 a check failed, 2 the
configuration is invalid or inadmissible, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import (
    analyze_ladder_structure,
    build_ladder_set,
    root_flags,
    spectrum_ladders,
    verify_intertwining,
    verify_linearized,
    verify_number_operator,
    verify_polynomial_algebra,
    verify_susy_block,
)
from .chain import (
    FactorizationConfig,
    build_table,
    oscillator_potential,
    partner_potential,
    singularity_scan,
)
from .errors import (
    DuplicateRootError,
    EigenConvergenceError,
    InadmissibleError,
    OverlapError,
    SeriesConvergenceError,
)
from .numerics import Grid, build_hamiltonian, tridiagonal_eigensolve
from .states import oscillator_state, spectrum_assemble, transformed_state

CHECKS = ("riccati", "spectrum", "intertwining", "algebra", "number",
          "linearized", "susy_block", "ladder_structure")

# One table of default tolerances; every entry is echoed in report.json.
DEFAULT_TOLERANCES = {
    "riccati": 1e-5,            # max |alpha' + alpha^2 - 2(V - e)|, interior
    "spectrum": 1e-3,           # |assembled energy - eigensolver energy|
    "intertwining": 1e-3,       # relative, interior
    "commutator": 5e-3,         # [H, D] + D and [H, D^dag] - D^dag, relative
    "ladder_commutator": 5e-3,  # [D, D^dag] vs N(E+1) - N(E), relative
    "annihilation": 1e-3,       # ||D psi_e||, ||D^dag psi_e|| for missing states
    "number": 1e-2,             # <psi, D^dag D psi> vs N(E), relative
    "linearized": 1e-2,         # D_L coefficients vs sqrt(n), sqrt(n+1)
    "susy_anticommutator": 1e-3,
    "susy_eigenvalue": 1e-2,
}

EXIT_OK, EXIT_CHECK, EXIT_INADMISSIBLE, EXIT_NUMERICAL = 0, 1, 2, 3
N_STATES_CSV = 8
N_ALGEBRA_STATES = 7


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    grid: Grid = field(default_factory=Grid)
    factorizations: FactorizationConfig = field(default_factory=FactorizationConfig)
    n_max: int = 8
    checks: tuple = CHECKS
    output_dir: Path = Path("out")
    tolerance_overrides: dict = field(default_factory=dict)
    sweep: dict | None = None

    @property
    def tolerances(self) -> dict:
        return {**DEFAULT_TOLERANCES, **self.tolerance_overrides}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {"grid", "factorizations", "n_max", "checks", "output_dir", "tolerances", "sweep"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            g = d.get("grid", {})
            grid = Grid(float(g.get("x_min", -12.0)), float(g.get("x_max", 12.0)),
                        int(g.get("n_points", Grid().n_points)))
            fac = FactorizationConfig(tuple((f["epsilon"], f.get("nu", 0.0))
                                            for f in d.get("factorizations", [])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        checks = parse_checks(d.get("checks", "all"))
        tol = dict(d.get("tolerances", {}))
        unknown = set(tol) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance names: {sorted(unknown)}")
        n_max = int(d.get("n_max", 8))
        if n_max < 0:
            raise ConfigError("n_max must be non-negative")
        return cls(grid, fac, n_max, checks, Path(d.get("output_dir", "out")),
                   {k: float(v) for k, v in tol.items()}, d.get("sweep"))

    def echo(self) -> dict:
        return {
            "grid": {"x_min": self.grid.x_min, "x_max": self.grid.x_max,
                     "n_points": self.grid.n_points},
            "factorizations": self.factorizations.to_list(),
            "n_max": self.n_max,
            "checks": list(self.checks),
            "output_dir": str(self.output_dir),
            "tolerances": dict(self.tolerance_overrides),
        }


def parse_checks(spec) -> tuple:
    if spec is None:
        return ()
    if isinstance(spec, str):
        spec = [s.strip() for s in spec.split(",") if s.strip()]
    spec = list(spec)
    if spec == ["all"]:
        return CHECKS
    bad = [c for c in spec if c not in CHECKS]
    if bad:
        raise ConfigError(f"unknown check names: {bad}")
    return tuple(c for c in CHECKS if c in spec)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (np.floating, float)):
        f = float(o)
        return f if math.isfinite(f) else str(f)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, Path):
        return str(o)
    return o


class Pipeline:
    """Lazily builds and caches the objects the artifacts and checks need."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.timings = {}
        self._cache = {}

    def _get(self, key, fn):
        if key not in self._cache:
            t = time.perf_counter()
            self._cache[key] = fn()
            self.timings[key] = time.perf_counter() - t
        return self._cache[key]

    @property
    def table(self):
        return self._get("table", lambda: build_table(self.cfg.factorizations, self.cfg.grid,
                                                      riccati_tol=None))

    @property
    def potential(self):
        return self._get("potential", lambda: partner_potential(self.table, self.table.m))

    @property
    def states(self):
        return self._get("states", lambda: spectrum_assemble(self.table, self.cfg.n_max))

    @property
    def oracle(self):
        def solve():
            H = build_hamiltonian(self.potential.values)
            return tridiagonal_eigensolve(H, max(len(self.states), N_STATES_CSV))
        return self._get("oracle", solve)

    @property
    def ops(self):
        return self._get("ladder_set", lambda: build_ladder_set(self.table))

    # -- artifacts --------------------------------------------------------
    def write_potential(self, out: Path):
        x = self.cfg.grid.x
        V0 = oscillator_potential(self.cfg.grid).values
        Vm = self.potential.values.values
        write_csv(out / "potential.csv", ["x", "V0", "V_m"], zip(x, V0, Vm))

    def write_alphas(self, out: Path):
        t = self.table
        cols = [t.diagonal(i).values for i in range(1, t.m + 1)]
        header = ["x"] + [f"alpha_{i}" for i in range(1, t.m + 1)]
        write_csv(out / "alphas.csv", header, zip(self.cfg.grid.x, *cols))

    def spectrum_rows(self):
        oracle = self.oracle.eigenvalues
        rows = []
        for i, s in enumerate(self.states):
            o = float(oracle[i]) if i < len(oracle) else None
            rows.append((i, s.energy, s.label, o, None if o is None else abs(o - s.energy)))
        return rows

    def write_spectrum(self, out: Path):
        write_csv(out / "spectrum.csv",
                  ["index", "energy", "provenance", "oracle_energy", "abs_diff"],
                  [(str(r[0]),) + r[1:] for r in self.spectrum_rows()])

    def write_states(self, out: Path):
        st = self.states[:N_STATES_CSV]
        write_csv(out / "states.csv", ["x"] + [s.label for s in st],
                  zip(self.cfg.grid.x, *[s.wavefunction.values for s in st]))

    # -- checks -----------------------------------------------------------
    def run_check(self, name: str) -> dict:
        tol = self.cfg.tolerances
        t0 = time.perf_counter()
        try:
            res = getattr(self, f"_check_{name}")(tol)
        except OverlapError as exc:
            res = {"status": "fail", "metrics": {}, "detail": str(exc)}
        res.setdefault("tolerance", None)
        res.setdefault("detail", "")
        res["wall_time_s"] = time.perf_counter() - t0
        return res

    @staticmethod
    def _verdict(metrics: dict, limits: dict) -> str:
        ok = all(metrics[k] <= limits[k] for k in limits)
        return "pass" if ok else "fail"

    def _check_riccati(self, tol):
        r = self.table.residuals
        metrics = {f"alpha[{i}][{k}]": v for (i, k), v in sorted(r.items())}
        worst = max(r.values(), default=0.0)
        return {"status": "pass" if worst <= tol["riccati"] else "fail",
                "tolerance": {"riccati": tol["riccati"]},
                "metrics": {"max": worst, **metrics}}

    def _check_spectrum(self, tol):
        diffs = [r[4] for r in self.spectrum_rows()]
        worst = max(diffs, default=0.0)
        return {"status": "pass" if worst <= tol["spectrum"] else "fail",
                "tolerance": {"spectrum": tol["spectrum"]},
                "metrics": {"max_abs_diff": worst, "n_levels": len(diffs)}}

    def _check_intertwining(self, tol):
        osc = [oscillator_state(n, self.cfg.grid) for n in range(6)]
        worst = verify_intertwining(self.ops, osc).max()
        return {"status": "pass" if worst <= tol["intertwining"] else "fail",
                "tolerance": {"intertwining": tol["intertwining"]},
                "metrics": {"max": worst}}

    def _check_algebra(self, tol):
        rep = verify_polynomial_algebra(self.ops, self.states[:N_ALGEBRA_STATES])
        m = {k: rep.max(k) for k in ("commutator_lower", "commutator_raise",
                                     "ladder_commutator", "annihilation_D",
                                     "annihilation_D_dagger")}
        limits = {"commutator_lower": tol["commutator"], "commutator_raise": tol["commutator"],
                  "ladder_commutator": tol["ladder_commutator"],
                  "annihilation_D": tol["annihilation"],
                  "annihilation_D_dagger": tol["annihilation"]}
        return {"status": self._verdict(m, limits), "tolerance": limits, "metrics": m}

    def _check_number(self, tol):
        st = [s for s in self.states
              if s.kind == "missing" or (s.kind == "transformed" and 1 <= s.index <= 5)]
        worst = verify_number_operator(self.ops, st).max()
        return {"status": "pass" if worst <= tol["number"] else "fail",
                "tolerance": {"number": tol["number"]}, "metrics": {"max": worst}}

    def _check_linearized(self, tol):
        if any(0.5 - e <= 0 for e in self.cfg.factorizations.epsilons):
            return {"status": "skipped", "metrics": {},
                    "detail": "the transformed ground state is deleted (epsilon_1 = 1/2)"}
        basis = [transformed_state(self.table, n) for n in range(7)]
        rep = verify_linearized(self.ops, basis)
        m = {"lower": rep.max("lower"), "raise": rep.max("raise")}
        limits = {"lower": tol["linearized"], "raise": tol["linearized"]}
        return {"status": self._verdict(m, limits), "tolerance": limits, "metrics": m}

    def _check_susy_block(self, tol):
        g = self.cfg.grid
        tr = [s for s in self.states if s.kind == "transformed"][:4]
        blocks = [(s, oscillator_state(s.index, g)) for s in tr]
        blocks += [(s, None) for s in self.states if s.kind == "missing"]
        rep = verify_susy_block(self.ops, blocks)
        m = {"anticommutator": rep.max("anticommutator"), "eigenvalue": rep.max("eigenvalue"),
             "q_squared": max(rep.max("q1_squared"), rep.max("q2_squared")),
             "factorization": rep.max("factorization")}
        limits = {"anticommutator": tol["susy_anticommutator"],
                  "eigenvalue": tol["susy_eigenvalue"]}
        return {"status": self._verdict(m, limits), "tolerance": limits, "metrics": m}

    def _check_ladder_structure(self, tol):
        roots, flags = root_flags(self.table)
        try:
            algebraic = analyze_ladder_structure(roots, flags)
        except DuplicateRootError as exc:
            return {"status": "skipped", "metrics": {"roots": roots},
                    "detail": f"number polynomial has a repeated root: {exc}"}
        assembled = spectrum_ladders(self.states)
        return {"status": "pass" if algebraic.matches(assembled) else "fail",
                "tolerance": {"exact": True},
                "metrics": {"roots": roots, "flags": flags,
                            "from_roots": algebraic.to_list(),
                            "from_spectrum": assembled.to_list()}}


def _empty_checks():
    return {c: {"status": "skipped", "tolerance": None, "metrics": {}, "detail": "",
                "wall_time_s": 0.0} for c in CHECKS}


def _report_skeleton(command: str, cfg: RunConfig | None) -> dict:
    return {
        "tool": "susyosc",
        "version": __version__,
        "command": command,
        "status": "ok",
        "exit_code": EXIT_OK,
        "error": None,
        "config": cfg.echo() if cfg else None,
        "tolerances": {
            "defaults": dict(DEFAULT_TOLERANCES),
            "overrides": dict(cfg.tolerance_overrides) if cfg else {},
            "effective": cfg.tolerances if cfg else dict(DEFAULT_TOLERANCES),
        },
        "admissibility": None,
        "checks": _empty_checks(),
        "artifacts": [],
        "sweep": None,
        "wall_time_s": {},
    }


def _finish(report: dict, out: Path, quiet: bool) -> int:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w", newline="\n") as fh:
        json.dump(_jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if not quiet:
        for name, c in report["checks"].items():
            if c["status"] != "skipped":
                print(f"{name:18s} {c['status']}")
        print(f"status: {report['status']} (exit {report['exit_code']})")
        if report["error"]:
            print(f"error: {report['error']}", file=sys.stderr)
    return report["exit_code"]


def _fail(report, status, code, msg):
    report["status"] = status
    report["exit_code"] = code
    report["error"] = msg
    return report


def run(cfg: RunConfig, command: str = "run", quiet: bool = True) -> int:
    """Execute ``command`` for ``cfg``; writes artifacts and report.json."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = _report_skeleton(command, cfg)
    t_start = time.perf_counter()

    if command == "sweep":
        return _finish(_sweep(cfg, report, out), out, quiet)

    scan = singularity_scan(cfg.factorizations, cfg.grid)
    report["admissibility"] = scan.to_dict()
    if not scan.admissible:
        first = scan.fatal[0]
        report["wall_time_s"]["total"] = time.perf_counter() - t_start
        if first.kind == "numerical":
            msg = f"numerical failure during the admissibility scan: {first.detail}"
            return _finish(_fail(report, "numerical_failure", EXIT_NUMERICAL, msg), out, quiet)
        msg = f"inadmissible configuration: {first.detail}"
        return _finish(_fail(report, "inadmissible", EXIT_INADMISSIBLE, msg), out, quiet)

    pipe = Pipeline(cfg)
    try:
        if command in ("run", "build"):
            for w in (pipe.write_potential, pipe.write_alphas, pipe.write_spectrum,
                      pipe.write_states):
                w(out)
            report["artifacts"] = ["potential.csv", "alphas.csv", "spectrum.csv", "states.csv"]
        elif command == "spectrum":
            pipe.write_spectrum(out)
            report["artifacts"] = ["spectrum.csv"]
        if command in ("run", "verify"):
            for name in cfg.checks:
                report["checks"][name] = pipe.run_check(name)
            if any(c["status"] == "fail" for c in report["checks"].values()):
                _fail(report, "check_failed", EXIT_CHECK, None)
    except InadmissibleError as exc:
        _fail(report, "inadmissible", EXIT_INADMISSIBLE, str(exc))
    except (EigenConvergenceError, SeriesConvergenceError, ArithmeticError) as exc:
        _fail(report, "numerical_failure", EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}")
    report["wall_time_s"] = {**pipe.timings, "total": time.perf_counter() - t_start}
    return _finish(report, out, quiet)


def sweep_rows(epsilon: float, nus, grid: Grid):
    rows = []
    for nu in nus:
        rep = singularity_scan(FactorizationConfig.of((epsilon, nu)), grid)
        fatal = rep.fatal
        rows.append({"nu": float(nu), "admissible": rep.admissible,
                     "kind": fatal[0].kind if fatal else "",
                     "x": fatal[0].x if fatal else None})
    return rows


def _sweep(cfg: RunConfig, report: dict, out: Path) -> dict:
    sw = cfg.sweep or {}
    eps = float(sw.get("epsilon", 0.0))
    lo, hi, step = (float(sw.get(k, d)) for k, d in
                    (("nu_min", -1.5), ("nu_max", 1.5), ("nu_step", 0.1)))
    count = int(round((hi - lo) / step)) + 1
    nus = [round(lo + i * step, 12) for i in range(count)]
    t = time.perf_counter()
    rows = sweep_rows(eps, nus, cfg.grid)
    adm = [r["nu"] for r in rows if r["admissible"]]
    write_csv(out / "sweep.csv", ["nu", "admissible", "kind", "x"],
              [(r["nu"], str(r["admissible"]).lower(), r["kind"], r["x"]) for r in rows])
    report["artifacts"] = ["sweep.csv"]
    report["sweep"] = {"epsilon": eps, "nu_min": lo, "nu_max": hi, "nu_step": step,
                       "admissible_range": [min(adm), max(adm)] if adm else None,
                       "rows": rows}
    report["wall_time_s"] = {"sweep": time.perf_counter() - t}
    return report


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="susyosc", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("run", "artifacts and checks"), ("build", "CSV artifacts only"),
                       ("verify", "checks only"), ("spectrum", "spectrum.csv only"),
                       ("sweep", "scan nu at fixed epsilon for admissibility")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", type=Path, help="JSON run configuration")
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument("--checks", help="comma-separated check names or 'all'")
        sp.add_argument("--quiet", action="store_true")
        if name == "sweep":
            sp.add_argument("--epsilon", type=float)
            sp.add_argument("--nu-min", type=float)
            sp.add_argument("--nu-max", type=float)
            sp.add_argument("--nu-step", type=float)
    return p


def load_config(args) -> RunConfig:
    d = {}
    if args.config is not None:
        try:
            d = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
    cfg = RunConfig.from_dict(d)
    if args.out is not None:
        cfg.output_dir = args.out
    if args.checks is not None:
        cfg.checks = parse_checks(args.checks)
    if args.command == "sweep":
        sw = dict(cfg.sweep or {})
        for key in ("epsilon", "nu_min", "nu_max", "nu_step"):
            v = getattr(args, key)
            if v is not None:
                sw[key] = v
        cfg.sweep = sw
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        out = args.out or Path("out")
        report = _fail(_report_skeleton(args.command, None), "invalid_config",
                       EXIT_INADMISSIBLE, str(exc))
        return _finish(report, out, args.quiet)
    return run(cfg, args.command, quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
