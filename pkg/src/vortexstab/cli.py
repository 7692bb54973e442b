"""Command-line front end.

Subcommands
-----------
check-profile    validate a vortex profile (built-in or tabulated W)
spectrum         sector spectra on two grids with persistence pairing
resolvent-scan   resolvent norms along a vertical line Re s = a
evolve           norm traces of e^{tL} (or of the advection group e^{tA})
pressure         one pressure solve dumped node by node (debugging aid)

Every option can also come from ``--config FILE`` (``key = value`` lines,
optionally under a ``[run]`` section); explicit flags win over the file.
All outputs carry the SHA-256 hash of the effective configuration.

Exit status: 0 pass, 1 profile assumptions violated, 2 input error,
3 solver error (or more than 10% failed scan samples), 4 instability flag.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (AssemblyError, AssumptionViolation, ConditioningError, DomainError,
                     SolverError, VortexStabError)

log = logging.getLogger("vortexstab")

EXIT_OK, EXIT_ASSUMPTION, EXIT_INPUT, EXIT_SOLVER, EXIT_INSTABILITY = 0, 1, 2, 3, 4
#: a scan fails when more than this fraction of its samples fail
SCAN_FAILURE_FRACTION = 0.10
FLOAT_FMT = "%.17g"

DEFAULT_M = (0, 1, 2, 3, 4)
DEFAULT_K = (0.0, 0.5, 1.0, 2.0, 4.0)

# command-specific defaults layered under the config file and the flags
COMMAND_DEFAULTS = {
    "check-profile": {},
    "spectrum": {"n": 64, "n_fine": 96},
    "resolvent-scan": {"n": 64},
    "evolve": {"n": 96, "m": (1,), "k": (1.0,)},
    "pressure": {"n": 128, "m": (1,), "k": (1.0,)},
}


class InputError(Exception):
    """Bad command-line or configuration input (exit status 2)."""


@dataclasses.dataclass
class RunConfig:
    """Everything a run depends on; serializable and hashable."""

    command: str = ""
    builtin: str | None = None
    table: str | None = None
    n: int = 64
    n_fine: int = 96
    r_max: float = 30.0
    m: tuple = DEFAULT_M
    k: tuple = DEFAULT_K
    a: float = 0.5
    tau: tuple | None = None
    tol: float = 1e-3
    t_max: float = 50.0
    samples: int = 256
    threshold: float = 0.05
    advection_only: bool = False
    method: str = "bvp"
    seed: int = 0
    out: str = "."
    workers: int | None = None

    #: fields that do not influence results
    NON_SEMANTIC = ("out", "workers")

    def semantic_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in self.NON_SEMANTIC:
            d.pop(key)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def sectors(self):
        return [(int(m), float(k)) for m in self.m for k in self.k]


# ---------------------------------------------------------------------------
# parsing helpers

def _int_list(text) -> tuple:
    return tuple(int(x) for x in _split(text))


def _float_list(text) -> tuple:
    return tuple(float(x) for x in _split(text))


def _split(text):
    if isinstance(text, (list, tuple)):
        return list(text)
    parts = [p.strip() for p in str(text).replace(" ", ",").split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return parts


def _tau_spec(text) -> tuple:
    """Either a comma list or ``lo:hi:step`` (inclusive of hi)."""
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    text = str(text).strip()
    if ":" in text:
        lo, hi, step = (float(x) for x in text.split(":"))
        if step <= 0 or hi < lo:
            raise ValueError(f"bad tau range {text!r}")
        return tuple(float(x) for x in np.arange(lo, hi + step / 2, step))
    return _float_list(text)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


CONVERTERS = {
    "builtin": str, "table": str, "n": int, "n_fine": int, "r_max": float,
    "m": _int_list, "k": _float_list, "a": float, "tau": _tau_spec, "tol": float,
    "t_max": float, "samples": int, "threshold": float, "advection_only": _bool,
    "method": str, "seed": int, "out": str, "workers": int,
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines (an optional section header is accepted)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from exc
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise InputError(f"malformed config file {path}: {exc}") from exc
    out = {}
    for section in cp.sections():
        for key, val in cp.items(section):
            key = key.replace("-", "_")
            if key not in CONVERTERS:
                raise InputError(f"unknown key {key!r} in config file {path}")
            out[key] = _convert(key, val)
    return out


def _convert(key, val):
    try:
        return CONVERTERS[key](val)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad value for {key}: {val!r} ({exc})") from exc


def build_config(args: argparse.Namespace) -> RunConfig:
    values = dict(COMMAND_DEFAULTS.get(args.command, {}))
    if args.config:
        values.update(read_config_file(args.config))
    for key in CONVERTERS:
        v = getattr(args, key, None)
        if v is not None and v is not False:
            values[key] = _convert(key, v)
    if values.get("workers") is None and os.environ.get("VORTEXSTAB_WORKERS"):
        values["workers"] = _convert("workers", os.environ["VORTEXSTAB_WORKERS"])
    cfg = RunConfig(command=args.command, **values)
    if cfg.builtin and cfg.table:
        raise InputError("give either --builtin or --table, not both")
    if not cfg.builtin and not cfg.table:
        cfg.builtin = "lamb_oseen"
    if cfg.n < 16 or cfg.n_fine < 16:
        raise InputError("grid sizes must be at least 16")
    if cfg.samples < 1:
        raise InputError("samples must be positive")
    if cfg.t_max < 0:
        raise InputError("t_max must be nonnegative")
    return cfg


def load_profile(cfg: RunConfig):
    from .profile import BUILTINS, omega_from_w, read_w_table

    if cfg.table:
        try:
            r, w = read_w_table(cfg.table)
        except OSError as exc:
            raise InputError(f"cannot read table {cfg.table}: {exc}") from exc
        except DomainError as exc:
            raise InputError(str(exc)) from exc
        try:
            return omega_from_w(r, w, name=Path(cfg.table).stem, strict=False)
        except DomainError as exc:
            raise InputError(f"invalid table {cfg.table}: {exc}") from exc
    if cfg.builtin not in BUILTINS:
        raise InputError(f"unknown built-in profile {cfg.builtin!r} (choose from {sorted(BUILTINS)})")
    return BUILTINS[cfg.builtin]()


# ---------------------------------------------------------------------------
# output helpers

def _outdir(cfg: RunConfig) -> Path:
    p = Path(cfg.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % float(v)
    return str(v)


def write_csv(path: Path, cfg: RunConfig, columns, rows):
    """Comma-separated table; '#' comment lines carry the hash and column names."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={cfg.config_hash()}\n")
        fh.write("# " + ",".join(columns) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else repr(f)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path: Path, cfg: RunConfig, payload: dict):
    doc = {"config_hash": cfg.config_hash(), "config": cfg.semantic_dict(), "version": __version__}
    doc.update(payload)
    with open(path, "w") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _map(cfg: RunConfig, fn, items):
    workers = cfg.workers or 1
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# commands

def cmd_check_profile(cfg: RunConfig) -> int:
    from .profile import check_assumptions

    prof = load_profile(cfg)
    rep = check_assumptions(prof)
    out = _outdir(cfg)
    payload = {"report": rep.to_dict(), "passed": rep.passed,
               "violations": [c.name for c in rep.violations()],
               "gamma": float(prof.gamma_total), "warnings": list(getattr(prof, "warnings", []))}
    path = write_json(out / "check_profile.json", cfg, payload)
    print(f"profile {prof.name}: H1 {'pass' if rep.h1_pass else 'FAIL'}, "
          f"H2 {'pass' if rep.h2_pass else 'FAIL'}, Gamma = {prof.gamma_total:.10g}")
    for c in rep.violations():
        where = f" at r = {c.location:.6g}" if c.location is not None else ""
        print(f"  violated: {c.name}{where} {c.detail}".rstrip())
    print(f"report written to {path}")
    return EXIT_OK if rep.passed else EXIT_ASSUMPTION


def cmd_spectrum(cfg: RunConfig) -> int:
    from .profile import check_assumptions
    from .spectral import compute_spectrum

    prof = load_profile(cfg)
    rep = check_assumptions(prof)
    flags = [] if rep.passed else ["profile assumptions violated: " +
                                   ", ".join(c.name for c in rep.violations())]

    def run(mk):
        m, k = mk
        try:
            return compute_spectrum(prof, m, k, n_coarse=cfg.n, n_fine=cfg.n_fine, r_max=cfg.r_max,
                                    check_profile=False)
        except (SolverError, AssemblyError, np.linalg.LinAlgError) as exc:
            raise SolverError(f"sector (m={m}, k={k}): {exc}") from exc

    results = _map(cfg, run, cfg.sectors())
    rows, sectors = [], []
    worst = 0.0
    for res in results:
        m, k = res.sector
        d = res.to_dict()
        d["flags"] = d["flags"] + flags
        d["essential_degenerate"] = m == 0
        d["max_abs_re_persistent"] = res.max_abs_real()
        d["n_persistent"] = int(res.persistent().size)
        sectors.append(d)
        worst = max(worst, res.max_abs_real())
        for e in res.eigenvalues:
            rows.append((m, k, e.value.real, e.value.imag, e.residual, e.persistent, e.band,
                         e.partner_distance))
    out = _outdir(cfg)
    ok = worst < cfg.tol
    write_csv(out / "spectrum.csv", cfg,
              ["m", "k", "re", "im", "residual", "persistent", "band", "partner_distance"], rows)
    write_json(out / "spectrum.json", cfg,
               {"sectors": sectors, "max_abs_re_persistent": worst, "tolerance": cfg.tol,
                "passed": ok, "profile_flags": flags})
    print(f"{len(sectors)} sectors, grids {cfg.n}/{cfg.n_fine}: max |Re lambda| over persistent "
          f"eigenvalues = {worst:.3e} (tolerance {cfg.tol:g})")
    return EXIT_OK if ok else EXIT_INSTABILITY


def cmd_resolvent_scan(cfg: RunConfig) -> int:
    from .grid import make_grid
    from .resolvent import scan_vertical_line

    prof = load_profile(cfg)
    g = make_grid(cfg.n, cfg.r_max)
    scan = scan_vertical_line(prof, cfg.a, list(cfg.m), list(cfg.k), tau_list=cfg.tau, g=g,
                              workers=cfg.workers)
    rows = [(x.s.real, x.m, x.k, x.s.imag, x.norm_estimate, x.method, x.status) for x in scan.samples]
    out = _outdir(cfg)
    write_csv(out / "resolvent_scan.csv", cfg, ["a", "m", "k", "tau", "norm", "method", "status"], rows)
    summary = scan.to_dict()
    # the m = k = 0 block acts on (u_theta, u_z) only and (s - L)^{-1} = 1/s there
    axi = [x for x in scan.samples if x.m == 0 and x.k == 0 and x.status == "ok"]
    if axi:
        dev = max(abs(x.norm_estimate * abs(x.s) - 1.0) for x in axi)
        summary["closed_form_m0k0"] = {"samples": len(axi), "max_rel_deviation_from_1_over_abs_s": dev}
    failed = scan.failures / max(len(scan.samples), 1)
    summary["failure_fraction"] = failed
    summary["failed_samples"] = [{"m": x.m, "k": x.k, "s": [x.s.real, x.s.imag], "status": x.status}
                                 for x in scan.samples if x.status != "ok"]
    write_json(out / "resolvent_summary.json", cfg, summary)
    print(f"a = {cfg.a:g}: max resolvent norm {scan.max_norm:.6g} at (m, k, tau) = {scan.argmax}, "
          f"trend exponent {scan.trend_exponent:.4f}, {scan.failures} failed samples")
    if "closed_form_m0k0" in summary:
        print(f"  m = k = 0 closed form 1/|s|: max relative deviation "
              f"{summary['closed_form_m0k0']['max_rel_deviation_from_1_over_abs_s']:.3e}")
    return EXIT_SOLVER if failed > SCAN_FAILURE_FRACTION else EXIT_OK


def cmd_evolve(cfg: RunConfig) -> int:
    from .evolution import MIN_FIT_POINTS, advection_bound, evolve_advection, evolve_full, fit_growth
    from .grid import make_grid, smooth_divfree_field
    from .operator import assemble_Lmk

    prof = load_profile(cfg)
    g = make_grid(cfg.n, cfg.r_max)
    t = np.array([0.0]) if cfg.t_max == 0 else np.linspace(0.0, cfg.t_max, cfg.samples)
    rows, fits = [], []
    status = EXIT_OK
    for idx, (m, k) in enumerate(cfg.sectors()):
        rng = np.random.default_rng([cfg.seed, idx])
        u0 = smooth_divfree_field(g, m, k, rng)
        flags, diag = [], {}
        if cfg.advection_only:
            fields = [evolve_advection(u0, prof, tj, g) for tj in t]
            comp = np.array([[g.norm(f.u_r), g.norm(f.u_theta), g.norm(f.u_z)] for f in fields])
            norms = np.sqrt(np.sum(comp ** 2, axis=1))
            diag["advection_bound"] = advection_bound(prof, g)
            if t.size >= MIN_FIT_POINTS:
                rate, deg, res = fit_growth(t, norms)
            else:
                rate, deg, res = 0.0, 0.0, (float("nan"), float("nan"))
                flags.append("too short to fit")
        else:
            op = assemble_Lmk(prof, m, k, g)
            tr = evolve_full(op, u0, t, cross_check=t.size > 1)
            norms, rate, deg, res = tr.norms, tr.fitted_exp_rate, tr.fitted_poly_degree, tr.fit_residuals
            flags, diag, comp = tr.flags, tr.diagnostics, tr.component_norms
        for tj, nj, cj in zip(t, norms, comp):
            rows.append((m, k, tj, nj, *cj))
        unstable = "overflow" in flags or rate >= cfg.threshold
        if unstable:
            status = EXIT_INSTABILITY
        fits.append({"m": m, "k": k, "exp_rate": rate, "poly_degree": deg,
                     "fit_rms": list(res), "flags": flags, "diagnostics": diag,
                     "unstable": unstable})
        print(f"sector (m={m}, k={k:g}): fitted exp rate {rate:.4g}, poly degree {deg:.3g}"
              + (f" [{', '.join(flags)}]" if flags else ""))
    out = _outdir(cfg)
    write_csv(out / "evolve_trace.csv", cfg, ["m", "k", "t", "norm", "norm_r", "norm_theta", "norm_z"], rows)
    write_json(out / "evolve_fit.json", cfg,
               {"mode": "advection" if cfg.advection_only else "full", "threshold": cfg.threshold,
                "sectors": fits, "passed": status == EXIT_OK})
    return status


def cmd_pressure(cfg: RunConfig) -> int:
    from .grid import make_grid, smooth_divfree_field
    from .pressure import _nodal_operator, forcing, pressure_bvp, pressure_green

    if cfg.method not in ("bvp", "green"):
        raise InputError(f"unknown pressure method {cfg.method!r} (bvp or green)")
    prof = load_profile(cfg)
    g = make_grid(cfg.n, cfg.r_max)
    m, k = cfg.sectors()[0]
    u = smooth_divfree_field(g, m, k, np.random.default_rng(cfg.seed))
    sol = (pressure_bvp if cfg.method == "bvp" else pressure_green)(prof, u, g)
    F = forcing(prof, u, g)
    scale = max(float(np.max(np.abs(F))), 1e-300)
    pointwise = np.abs(_nodal_operator(g, m, k) @ sol.p - F) / scale
    out = _outdir(cfg)
    write_csv(out / "pressure.csv", cfg, ["r", "re_p", "im_p", "residual"],
              zip(g.r_nodes, sol.p.real, sol.p.imag, pointwise))
    write_json(out / "pressure.json", cfg,
               {"sector": [m, k], "method": sol.method, "residual_norm": sol.residual_norm,
                "diagnostics": {kk: (str(v) if isinstance(v, complex) else v)
                                for kk, v in sol.diagnostics.items()}})
    print(f"pressure ({sol.method}) in sector (m={m}, k={k:g}) on n={g.n}: "
          f"relative residual {sol.residual_norm:.3e}")
    return EXIT_OK


COMMANDS = {
    "check-profile": cmd_check_profile,
    "spectrum": cmd_spectrum,
    "resolvent-scan": cmd_resolvent_scan,
    "evolve": cmd_evolve,
    "pressure": cmd_pressure,
}


# ---------------------------------------------------------------------------
# argument parser

def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value configuration file (flags override it)")
    src = p.add_argument_group("profile")
    src.add_argument("--builtin", help="built-in profile: lamb_oseen or kaufmann_scully")
    src.add_argument("--table", help="CSV file with columns r, W (normalized W(0) = 2)")
    grid = p.add_argument_group("grid")
    grid.add_argument("--n", type=int, help="number of radial nodes")
    grid.add_argument("--r-max", dest="r_max", type=float, help="outer radius of the grid (default 30)")
    p.add_argument("--seed", type=int, help="seed for random test fields (default 0)")
    p.add_argument("--out", help="output directory (default: current directory)")
    p.add_argument("--workers", type=int,
                   help="worker threads (default: $VORTEXSTAB_WORKERS or 1)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _sector_args(p):
    p.add_argument("--m", help="comma-separated azimuthal wavenumbers (default 0,1,2,3,4)")
    p.add_argument("--k", help="comma-separated axial wavenumbers (default 0,0.5,1,2,4)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vortexstab", description=__doc__.split("\n\n")[0],
                                 formatter_class=argparse.RawDescriptionHelpFormatter,
                                 epilog="exit status: 0 pass, 1 assumption fail, 2 input error, "
                                        "3 solver error, 4 instability flag")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("check-profile", help="validate the profile assumptions")
    _common(p)

    p = sub.add_parser("spectrum", help="sector spectra with persistence pairing")
    _common(p)
    _sector_args(p)
    p.add_argument("--n-fine", dest="n_fine", type=int, help="fine grid size (default 96)")
    p.add_argument("--tol", type=float, help="bound on |Re lambda| of persistent eigenvalues (default 1e-3)")

    p = sub.add_parser("resolvent-scan", help="resolvent norms on Re s = a")
    _common(p)
    _sector_args(p)
    p.add_argument("--a", type=float, help="real part of the spectral parameter (default 0.5)")
    p.add_argument("--tau", help="imaginary parts: comma list or lo:hi:step (default per m)")

    p = sub.add_parser("evolve", help="norm traces of the evolution group")
    _common(p)
    _sector_args(p)
    p.add_argument("--t-max", dest="t_max", type=float, help="final time (default 50)")
    p.add_argument("--samples", type=int, help="number of output times (default 256)")
    p.add_argument("--threshold", type=float, help="instability threshold on the fitted rate (default 0.05)")
    p.add_argument("--advection-only", dest="advection_only", action="store_true",
                   help="evolve with the explicit advection group only")

    p = sub.add_parser("pressure", help="dump one pressure solve (first m and k)")
    _common(p)
    _sector_args(p)
    p.add_argument("--method", choices=("bvp", "green"), help="solver (default bvp)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        log.info("config hash %s", cfg.config_hash())
        return COMMANDS[args.command](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssumptionViolation as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, ConditioningError, AssemblyError, VortexStabError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
