"""Command-line front end: ``np-duet {solve,spectrum,oracle,sweep,decompose}``.

Coordinates are those of the solver frame: disk centres on the real axis with
the gap between them.  Floats are written with 17 significant digits so that
identical configurations give identical bytes.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import oracle as bie
from .analysis import bound_ratio, fit_exponent, sweep
from .errors import ConfigurationError, NPDuetError, NumericalError, ValidationError
from .geometry import derive_geometry
from .harmonic_data import SourceSpec, divergence_integral, indicator_piece, mode_data
from .solver import solve_field
from .spectrum import lambda_from_k, mode_norm, parse_conductivity, solve_modes

SUBCOMMANDS = ("solve", "spectrum", "oracle", "sweep", "decompose")
FORMATS = ("csv", "json")
SOLVE_COLUMNS = ("x", "y", "zone", "u", "ux", "uy", "uxx", "uxy", "uyy")
SPECTRUM_COLUMNS = ("n", "parity", "eigenvalue", "mode_norm", "C+", "C-", "a+", "a-")
VALUE_FLAGS = ("--grid", "--anchor", "--eps-list", "--source-disk")
SWEEP_COLUMNS = ("eps", "rho", "lambda1", "lambda2", "order", "gap_max", "bound_value",
                 "ratio", "gap_max_1", "gap_max_2", "N", "error")


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class RunConfig:
    """All run parameters; key names match the config-file keys."""

    command: str = "solve"
    r1: float = 1.0
    r2: float = 1.0
    eps: float | None = None
    eps_list: list | None = None
    k1: str = "inf"
    k2: str = "inf"
    source: object = "x"
    nmax: int = 256
    tol: float = 1e-10
    anchor: str = "inf"
    path: str | None = None
    format: str = "csv"
    grid: str = "-3:3:-2:2:61"
    order: int = 1
    nodes: int = 256
    points: int = 50
    seed: int = 0

    def validate(self) -> "RunConfig":
        if self.command not in SUBCOMMANDS:
            raise ConfigurationError(f"unknown subcommand {self.command!r}")
        if self.format not in FORMATS:
            raise ConfigurationError(f"format must be one of {FORMATS}")
        for name in ("r1", "r2"):
            if not float(getattr(self, name)) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.command == "sweep":
            if not self.eps_list:
                raise ConfigurationError("sweep needs eps_list")
        elif self.eps is None:
            raise ConfigurationError("eps is required")
        parse_conductivity(self.k1)
        parse_conductivity(self.k2)
        if self.order not in (1, 2):
            raise ConfigurationError("order must be 1 or 2")
        parse_grid(self.grid)
        source_spec(self.source)
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.r1, cfg.r2 = float(cfg.r1), float(cfg.r2)
        cfg.eps = None if cfg.eps is None else float(cfg.eps)
        if isinstance(cfg.eps_list, str):
            cfg.eps_list = [float(e) for e in cfg.eps_list.split(",") if e.strip()]
        elif cfg.eps_list is not None:
            cfg.eps_list = [float(e) for e in cfg.eps_list]
        cfg.k1, cfg.k2 = str(cfg.k1), str(cfg.k2)
        cfg.nmax, cfg.order, cfg.nodes = int(cfg.nmax), int(cfg.order), int(cfg.nodes)
        cfg.points, cfg.seed = int(cfg.points), int(cfg.seed)
        cfg.tol = float(cfg.tol)
        cfg.anchor = str(cfg.anchor)
        return cfg


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file: {exc}") from exc
    try:
        data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"malformed config file: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a mapping")
    return data


def parse_grid(text: str):
    """``xmin:xmax:ymin:ymax:n`` or ``xmin:xmax:ymin:ymax:nx:ny``."""
    parts = str(text).split(":")
    if len(parts) not in (5, 6):
        raise ConfigurationError("grid must be xmin:xmax:ymin:ymax:n[:ny]")
    try:
        x0, x1, y0, y1 = (float(p) for p in parts[:4])
        nx = int(parts[4])
        ny = int(parts[5]) if len(parts) == 6 else nx
    except ValueError as exc:
        raise ConfigurationError(f"bad grid {text!r}") from exc
    if nx < 1 or ny < 1 or not (x1 >= x0 and y1 >= y0):
        raise ConfigurationError(f"bad grid {text!r}")
    return x0, x1, y0, y1, nx, ny


def source_spec(source) -> SourceSpec:
    """A polynomial string, or ``{"disks": [[cx, cy, radius, amplitude], ...]}``."""
    if isinstance(source, str):
        return SourceSpec.from_polynomial(source)
    if isinstance(source, dict) and "disks" in source:
        pieces = []
        for d in source["disks"]:
            d = [float(v) for v in d]
            if len(d) not in (3, 4):
                raise ConfigurationError("a disk piece is [cx, cy, radius] or [cx, cy, radius, amplitude]")
            pieces.append(indicator_piece(complex(d[0], d[1]), d[2], d[3] if len(d) == 4 else 1.0))
        return SourceSpec.divergence(pieces)
    raise ConfigurationError("source must be a harmonic polynomial or a 'disks' mapping")


# ---------------------------------------------------------------------------
# Formatting


def fmt_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (complex, np.complexfloating)):
        return "%.17g%+.17gj" % (v.real, v.imag)
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _json_value(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (complex, np.complexfloating)):
        return "[" + _json_value(float(v.real)) + ", " + _json_value(float(v.imag)) + "]"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v if math.isfinite(v) else "null"
    return json.dumps(str(v))


def render(columns, rows, report: dict, fmt: str) -> str:
    """CSV with ``# key,value`` report lines first, or the JSON mirror."""
    if fmt == "json":
        payload = {"report": report, "columns": list(columns),
                   "rows": [dict(zip(columns, r)) for r in rows]}
        return _json_value(payload) + "\n"
    out = io.StringIO()
    for k, v in report.items():
        out.write(f"# {k},{fmt_value(v)}\n")
    if columns:
        out.write(",".join(columns) + "\n")
        for r in rows:
            out.write(",".join(fmt_value(v) for v in r) + "\n")
    return out.getvalue()


def output_path(cfg: RunConfig) -> str | None:
    """``NP_DUET_OUT`` overrides the directory of the output file."""
    out_dir = os.environ.get("NP_DUET_OUT")
    if out_dir:
        name = os.path.basename(cfg.path) if cfg.path else f"{cfg.command}.{cfg.format}"
        return os.path.join(out_dir, name)
    return cfg.path


# ---------------------------------------------------------------------------
# Subcommands


def _geometry(cfg: RunConfig, eps=None):
    return derive_geometry(cfg.r1, cfg.r2, cfg.eps if eps is None else eps)


def _anchor(cfg: RunConfig):
    a = cfg.anchor.strip().lower()
    return math.inf if a in ("inf", "infinity") else complex(a.replace(" ", ""))


def _solve(cfg: RunConfig, g=None):
    g = g or _geometry(cfg)
    return solve_field(g, cfg.k1, cfg.k2, source_spec(cfg.source), nmax=cfg.nmax, tol=cfg.tol,
                       anchor=_anchor(cfg))


def cmd_solve(cfg: RunConfig):
    x0, x1, y0, y1, nx, ny = parse_grid(cfg.grid)
    sol = _solve(cfg)
    xs, ys = np.linspace(x0, x1, nx), np.linspace(y0, y1, ny)
    pts = (xs[None, :] + 1j * ys[:, None]).ravel()
    v = sol.evaluate(pts, 2)
    rows = [(p.real, p.imag, int(z), u, a, b, c, d, e)
            for p, z, u, a, b, c, d, e in zip(pts, v.zone, v.u, v.ux, v.uy, v.uxx, v.uxy, v.uyy)]
    report = {"N": sol.harmonic_pair.N, "constant": sol.constant}
    return SOLVE_COLUMNS, rows, report


def cmd_spectrum(cfg: RunConfig):
    g = _geometry(cfg)
    src = source_spec(cfg.source)
    sol = solve_field(g, cfg.k1, cfg.k2, src, tol=cfg.tol, anchor=_anchor(cfg))
    lam1, lam2 = lambda_from_k(cfg.k1), lambda_from_k(cfg.k2)
    Cp, Cm = mode_data(g, sol.harmonic_pair)
    count = cfg.nmax
    pad = lambda v: np.pad(v, (0, max(0, count - v.size)))[:count]
    modes = solve_modes(lam1, lam2, g.rho, pad(Cp), pad(Cm))
    rows = []
    for n in range(1, count + 1):
        i = n - 1
        # the mode data columns are shared by both parities of order n
        for sgn, name in ((1, "+"), (-1, "-")):
            rows.append((n, name, -sgn * 0.5 * g.rho ** n, mode_norm(g, n, sgn),
                         modes.C_plus[i], modes.C_minus[i], modes.a_plus[i], modes.a_minus[i]))
    report = {"rho": g.rho, "beta": g.beta, "lambda1": lam1, "lambda2": lam2}
    return SPECTRUM_COLUMNS, rows, report


def _test_points(g, count: int, seed: int, margin: float = 0.05):
    rng = np.random.default_rng(seed)
    rmax = max(g.r1, g.r2)
    box = (g.c1 - g.r1 - 1.0, g.c2 + g.r2 + 1.0, -rmax - 1.0, rmax + 1.0)
    pts = []
    while len(pts) < count:
        p = complex(rng.uniform(box[0], box[1]), rng.uniform(box[2], box[3]))
        if all(abs(abs(p - g.center(s)) - g.radius(s)) >= margin for s in (1, 2)):
            pts.append(p)
    return np.array(pts)


def cmd_oracle(cfg: RunConfig):
    g = _geometry(cfg)
    src = source_spec(cfg.source)
    if src.variant != "harmonic_background":
        raise ConfigurationError("the oracle comparison takes a harmonic polynomial source")
    sol = _solve(cfg, g)
    sysm = bie.assemble(g, cfg.nodes)
    bg = sol.background
    grad = bg.evaluate(sysm.nodes, 1)[1]
    eta = np.real(grad * np.conj(sysm.normals))
    phi = bie.oracle_solve(sysm, eta, sol.lambda1, sol.lambda2)
    pts = _test_points(g, cfg.points, cfg.seed)
    uo = bie.oracle_field(sysm, phi, lambda z: bg.evaluate(z, 0)[0], pts)
    us = sol.evaluate(pts).u
    rel = float(np.max(np.abs(us - uo)) / max(np.max(np.abs(uo)), 1e-300))
    count = min(8, cfg.nodes // 4)
    clusters = bie.oracle_spectrum(sysm)
    rows = []
    for n in range(1, count + 1):
        for s, name in ((1, "+"), (-1, "-")):
            exact = -s * 0.5 * g.rho ** n
            near = min(clusters, key=lambda c: abs(c[0] - exact))
            rows.append((n, name, exact, near[0], near[1], abs(near[0] - exact)))
    half = min(clusters, key=lambda c: abs(c[0] - 0.5))
    report = {"max_rel_error": rel, "symmetrization_residual": bie.symmetrization_residual(sysm),
              "half_eigenvalue": half[0], "half_multiplicity": half[1], "nodes": cfg.nodes}
    return ("n", "parity", "closed_form", "nystrom", "multiplicity", "abs_error"), rows, report


def cmd_sweep(cfg: RunConfig):
    src = source_spec(cfg.source)
    recs = sweep((cfg.r1, cfg.r2), cfg.k1, cfg.k2, src, cfg.eps_list, order=cfg.order,
                 nmax=cfg.nmax, tol=cfg.tol, anchor=_anchor(cfg))
    rows = []
    ratios = {}
    try:
        ratios = dict(zip([r.eps for r in recs if r.ok], bound_ratio(recs, cfg.order)))
    except NPDuetError:
        pass
    for r in recs:
        rows.append((r.eps, r.rho, r.lambda1, r.lambda2, r.order, r.gap_max, r.bound_value,
                     ratios.get(r.eps, math.nan) if r.ok else math.nan,
                     r.norms.get("gap_max_1", math.nan), r.norms.get("gap_max_2", math.nan),
                     r.N, r.error or ""))
    report = {}
    for name in ("gap_max_1", "gap_max_2"):
        try:
            slope, r2 = fit_exponent(recs, name)
        except NPDuetError:
            slope, r2 = math.nan, math.nan
        report[f"slope_{name}"] = slope
        report[f"r2_{name}"] = r2
    return SWEEP_COLUMNS, rows, report


def cmd_decompose(cfg: RunConfig):
    g = _geometry(cfg)
    src = source_spec(cfg.source)
    if src.variant != "divergence_source":
        raise ConfigurationError("decompose needs a 'disks' divergence source")
    sol = _solve(cfg, g)
    dec = sol.decomposition
    res1, res2 = dec.residual_integrals()
    report = {"w1": dec.w1, "w2": dec.w2, "residual_integral_1": res1, "residual_integral_2": res2}
    for side in (1, 2):
        if side in dec.correctors:
            report[f"divergence_integral_{side}"] = divergence_integral(dec.correctors[side])
    report["N"] = sol.harmonic_pair.N
    return (), [], report


COMMANDS = {"solve": cmd_solve, "spectrum": cmd_spectrum, "oracle": cmd_oracle,
            "sweep": cmd_sweep, "decompose": cmd_decompose}


# ---------------------------------------------------------------------------
# Argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="np-duet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON or YAML file with RunConfig keys")
        s.add_argument("--r1", type=float)
        s.add_argument("--r2", type=float)
        s.add_argument("--eps", type=float)
        s.add_argument("--eps-list", dest="eps_list", help="comma-separated eps values")
        s.add_argument("--k1")
        s.add_argument("--k2")
        s.add_argument("--source", help="harmonic polynomial in x and y")
        s.add_argument("--source-disk", dest="source_disk", action="append",
                       help="indicator source cx,cy,radius[,amplitude]; repeatable")
        s.add_argument("--nmax", type=int)
        s.add_argument("--tol", type=float)
        s.add_argument("--anchor")
        s.add_argument("--out", dest="path")
        s.add_argument("--format", choices=FORMATS)
        s.add_argument("--grid")
        s.add_argument("--order", type=int)
        s.add_argument("--nodes", type=int)
        s.add_argument("--points", type=int)
        s.add_argument("--seed", type=int)
    return p


def _glue_values(argv):
    """Join ``--grid -3:3:...`` into ``--grid=-3:3:...`` so argparse keeps the value."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def config_from_args(argv) -> RunConfig:
    ns = build_parser().parse_args(_glue_values(argv))
    data = load_config_file(ns.config) if ns.config else {}
    data = dict(data)
    data.pop("command", None)
    flags = {k: v for k, v in vars(ns).items() if v is not None and k not in ("config", "source_disk")}
    if ns.source_disk:
        disks = []
        for item in ns.source_disk:
            try:
                disks.append([float(t) for t in item.split(",")])
            except ValueError as exc:
                raise ConfigurationError(f"bad --source-disk {item!r}") from exc
        flags["source"] = {"disks": disks}
    data.update(flags)
    return RunConfig.from_dict(data).validate()


def run(argv=None, stdout=None, stderr=None) -> int:
    """Run one subcommand; returns 0, 1 (validation error) or 2 (numerical error)."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg = config_from_args(list(sys.argv[1:] if argv is None else argv))
        columns, rows, report = COMMANDS[cfg.command](cfg)
        text = render(columns, rows, report, cfg.format)
        path = output_path(cfg)
        if path:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            stdout.write(text)
        return 0
    except ValidationError as exc:
        stderr.write(f"np-duet: validation error [{type(exc).__name__}]: {exc}\n")
        return 1
    except NumericalError as exc:
        stderr.write(f"np-duet: numerical error [{type(exc).__name__}]: {exc}\n")
        return 2
    except OSError as exc:
        stderr.write(f"np-duet: validation error [OSError]: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
