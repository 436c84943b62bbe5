"""Command-line front end.

Subcommands ``simulate``, ``pde``, ``compare``, ``branches`` and ``render``.
Every flag has a JSON config twin (``--r-seed`` <-> ``"r_seed"``) read with
``--config``; flags win over file values and unknown keys are rejected.

Exit status: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import svg
from .bloore import CurveError, evolve, init_contour, write_snapshots
from .environment import parse_environment
from .geometry import GeometryError, make_rounded_polygon
from .homothetic import fold_point, solve_alpha
from .ode import IntegrationError, StepControl, integrate

MAX_ROWS = 10_000
COMPARE_GRID = 200
COMPARE_PASS = 0.10
MIN_OVERLAP = 0.5
KINDS = ("simulate", "pde", "compare", "branches")


class UsageError(ValueError):
    """Bad flags, config keys or parameter values; exit status 2."""


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# -- value parsers shared by flags and config values ------------------------


def parse_n_list(value: Any) -> tuple[int, ...]:
    """``4``, ``"3,4,5"``, ``"3..10"`` or a JSON list of integers."""
    if isinstance(value, bool):
        raise UsageError(f"bad fold count {value!r}")
    if isinstance(value, int):
        out = [value]
    elif isinstance(value, (list, tuple)):
        out = [v for item in value for v in parse_n_list(item)]
    else:
        out = []
        for part in str(value).split(","):
            part = part.strip()
            try:
                if ".." in part:
                    lo, hi = part.split("..")
                    out.extend(range(int(lo), int(hi) + 1))
                else:
                    out.append(int(part))
            except ValueError:
                raise UsageError(f"bad fold count {part!r}") from None
    if not out:
        raise UsageError(f"empty fold-count list {value!r}")
    return tuple(out)


def parse_p_grid(value: Any) -> tuple[float, ...]:
    """``"lo:hi:count"`` (inclusive linspace), ``"p1,p2,..."`` or a JSON list."""
    if isinstance(value, (list, tuple)):
        return tuple(_float(v, "p") for v in value)
    text = str(value)
    if ":" in text:
        try:
            lo, hi, count = text.split(":")
            grid = np.linspace(float(lo), float(hi), int(count))
        except ValueError:
            raise UsageError(f"bad p grid {text!r}; expected lo:hi:count") from None
        return tuple(float(p) for p in grid)
    return tuple(_float(p, "p") for p in text.split(","))


def _float(value: Any, what: str = "number") -> float:
    if isinstance(value, bool):
        raise UsageError(f"bad {what} {value!r}")
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise UsageError(f"bad {what} {value!r}") from None
    if not math.isfinite(x):
        raise UsageError(f"non-finite {what} {value!r}")
    return x


def _int(value: Any) -> int:
    if isinstance(value, bool):
        raise UsageError(f"bad integer {value!r}")
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise UsageError(f"bad integer {value!r}") from None
    if x != int(x):
        raise UsageError(f"bad integer {value!r}")
    return int(x)


def _bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).lower()
    if text in ("1", "true", "yes"):
        return True
    if text in ("0", "false", "no"):
        return False
    raise UsageError(f"bad boolean {value!r}")


def _str(value: Any) -> str:
    if not isinstance(value, str):
        raise UsageError(f"expected a string, got {value!r}")
    return value


# -- scenario ----------------------------------------------------------------


@dataclass(frozen=True)
class Option:
    name: str
    convert: Callable[[Any], Any]
    kinds: tuple[str, ...]
    help: str
    flag_only: bool = False


OPTIONS = (
    Option("n", parse_n_list, ("simulate", "pde", "branches"), "fold count: 4, 3,4,5 or 3..10"),
    Option("a0", _float, ("simulate", "pde"), "initial inscribed diameter"),
    Option("r0", _float, ("simulate", "pde"), "initial corner radius"),
    Option("env", _str, ("simulate",), "abrader environment, e.g. constant:0.1"),
    Option("h", _float, ("simulate",), "RK4 step (default 1e-4 a0)"),
    Option("slope_swap_threshold", _float, ("simulate",), "switch to R as variable above this |dR/da|"),
    Option("a_min", _float, ("simulate", "pde"), "stop size (ODE default 1e-3 a0, PDE 0.1 a0)"),
    Option("event_tol", _float, ("simulate",), "event location tolerance"),
    Option("continue_past_circle", _bool, ("simulate",), "integrate through R = a/2"),
    Option("c", _float, ("pde",), "curvature coefficient"),
    Option("w0", _int, ("pde",), "constant speed, 0 or 1"),
    Option("points", _int, ("pde",), "marker points"),
    Option("r_seed", _float, ("pde",), "seed fillet for sharp corners (default 0.005 a0)"),
    Option("snapshot_every", _int, ("pde",), "measure every k steps"),
    Option("contour_every", _int, ("pde",), "store a contour every k steps"),
    Option("i_proj_stop", _float, ("pde",), "stop once i_proj reaches this"),
    Option("ode", _str, ("compare",), "ODE trajectory CSV"),
    Option("pde", _str, ("compare",), "PDE trajectory CSV"),
    Option("p_grid", parse_p_grid, ("branches",), "lo:hi:count or p1,p2,..."),
    Option("out", _str, KINDS, "output CSV ({n} expands per fold count)"),
    Option("snapshots", _str, ("pde",), "contour snapshot CSV ({n} expands)"),
    Option("jobs", _int, ("simulate", "pde"), "run fold counts concurrently"),
)
OPTION_BY_NAME = {o.name: o for o in OPTIONS}


@dataclass(frozen=True)
class Scenario:
    kind: str
    n: tuple[int, ...] = (4,)
    a0: float = 1.0
    r0: float = 0.0
    env: str = "dust"
    h: Optional[float] = None
    slope_swap_threshold: float = 1.0
    a_min: Optional[float] = None
    event_tol: Optional[float] = None
    continue_past_circle: bool = False
    c: float = 0.1
    w0: int = 1
    points: int = 1024
    r_seed: Optional[float] = None
    snapshot_every: int = 50
    contour_every: Optional[int] = None
    i_proj_stop: Optional[float] = None
    ode: Optional[str] = None
    pde: Optional[str] = None
    p_grid: tuple[float, ...] = tuple(float(p) for p in np.linspace(0.0025, 0.25, 100))
    out: Optional[str] = None
    snapshots: Optional[str] = None
    jobs: int = 1

    def step_control(self) -> StepControl:
        return StepControl(
            h=self.h,
            slope_swap_threshold=self.slope_swap_threshold,
            a_min=self.a_min,
            event_tol=self.event_tol,
            continue_past_circle=self.continue_past_circle,
        )

    def output_for(self, template: Optional[str], n: int) -> Optional[str]:
        if template is None:
            return None
        return template.replace("{n}", str(n))

    def to_config(self) -> dict[str, Any]:
        """Flat JSON-ready dict of the fields that differ from the defaults."""
        default = Scenario(self.kind)
        out: dict[str, Any] = {}
        for f in fields(self):
            if f.name == "kind":
                continue
            value = getattr(self, f.name)
            if value != getattr(default, f.name):
                out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    def to_argv(self) -> list[str]:
        argv = [self.kind]
        for key, value in self.to_config().items():
            flag = "--" + key.replace("_", "-")
            if isinstance(value, bool):
                argv.append(f"{flag}={'true' if value else 'false'}")
            elif isinstance(value, list):
                argv.append(f"{flag}={','.join(repr(v) for v in value)}")
            elif isinstance(value, float):
                argv.append(f"{flag}={value!r}")
            else:
                argv.append(f"{flag}={value}")
        return argv


def validate(s: Scenario) -> None:
    """Run every owning module's checks before anything is computed."""
    if s.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    if s.kind in ("simulate", "pde"):
        for n in s.n:
            make_rounded_polygon(n, s.a0, s.r0)
        if len(s.n) > 1:
            for name in ("out", "snapshots"):
                path = getattr(s, name)
                if path is not None and "{n}" not in path:
                    raise UsageError(f"--{name} needs a {{n}} placeholder for several fold counts")
    if s.kind == "simulate":
        env = parse_environment(s.env)
        s.step_control().resolve(s.a0)
        for n in s.n:
            env.effective_radius(n, s.r0, s.a0)
    elif s.kind == "pde":
        if s.w0 not in (0, 1):
            raise UsageError("--w0 must be 0 or 1")
        if s.c < 0 or (s.c == 0 and s.w0 == 0):
            raise UsageError("need c >= 0 and a non-zero speed")
        if s.points < 64:
            raise UsageError(f"--points must be >= 64, got {s.points}")
        if s.r_seed is not None and not s.r_seed > 0:
            raise UsageError("--r-seed must be positive")
        if s.snapshot_every < 1 or (s.contour_every is not None and s.contour_every < 1):
            raise UsageError("snapshot intervals must be >= 1")
        if s.a_min is not None and not 0 < s.a_min < s.a0:
            raise UsageError("--a-min must lie in (0, a0)")
    elif s.kind == "compare":
        if not (s.ode and s.pde):
            raise UsageError("compare needs --ode and --pde")
    elif s.kind == "branches":
        if any(not 0 < p <= 1 for p in s.p_grid):
            raise UsageError("p grid must lie in (0, 1]")
        if any(n < 3 for n in s.n):
            raise UsageError("fold counts must be >= 3")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fragabrasion", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", help="JSON file with flat keys mirroring the flags")
        for opt in OPTIONS:
            if kind in opt.kinds:
                sp.add_argument("--" + opt.name.replace("_", "-"), dest=opt.name, default=None, help=opt.help)
    rp = sub.add_parser("render")
    rp.add_argument("inputs", nargs="+")
    rp.add_argument("--mode", required=True, type=str.upper, choices=("RA_FLOW", "CONTOURS", "BRANCHES"))
    rp.add_argument("--out", required=True)
    rp.add_argument("--n", type=int, help="fold count for CONTOURS from a trajectory CSV")
    rp.add_argument("--r-star", type=float, help="draw the R = R* line in RA_FLOW")
    rp.add_argument("--shapes", type=int, default=8, help="shapes per CONTOURS row")
    return parser


def parse_scenario(argv: Sequence[str] | None = None, config_text: str | None = None) -> Scenario:
    """Build a validated scenario from flags and/or JSON config text.

    ``config_text`` needs a ``"kind"`` key when no argv is given.
    """
    argv = list(argv or [])
    values: dict[str, Any] = {}
    if argv:
        parser = _build_parser()
        try:
            ns = parser.parse_args(argv)
        except SystemExit as exc:
            raise UsageError(f"cannot parse {argv!r}") from exc
        kind = ns.kind
        if kind == "render":
            raise UsageError("render is not a scenario")
        if ns.config:
            try:
                config_text = Path(ns.config).read_text()
            except OSError as exc:
                raise UsageError(f"cannot read config: {exc}") from None
        flags = {k: v for k, v in vars(ns).items() if k not in ("kind", "config") and v is not None}
    else:
        flags = {}
        kind = None
    if config_text is not None:
        try:
            config = json.loads(config_text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad JSON config: {exc}") from None
        if not isinstance(config, dict):
            raise UsageError("config must be a JSON object")
        kind = config.pop("kind", kind)
        if kind is None:
            raise UsageError("config needs a 'kind'")
        for key, value in config.items():
            opt = OPTION_BY_NAME.get(key)
            if opt is None or kind not in opt.kinds:
                raise UsageError(f"unknown config key {key!r} for {kind}")
            values[key] = value
    if kind not in KINDS:
        raise UsageError(f"unknown scenario kind {kind!r}")
    values.update(flags)
    converted = {k: None if v is None else OPTION_BY_NAME[k].convert(v) for k, v in values.items()}
    scenario = Scenario(kind, **converted)
    try:
        validate(scenario)
    except (GeometryError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(str(exc)) from None
    return scenario


# -- CSV helpers ---------------------------------------------------------------


def read_table(path: str | Path) -> tuple[dict[str, np.ndarray | list[str]], list[str]]:
    """Columns of a CSV written by this tool plus its ``#`` comment lines."""
    comments: list[str] = []
    rows: list[list[str]] = []
    header: list[str] | None = None
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            if row[0].startswith("#"):
                comments.append(",".join(row).lstrip("#").strip())
                continue
            if header is None:
                header = row
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: row has {len(row)} fields, header has {len(header)}")
            rows.append(row)
    if header is None:
        raise ValueError(f"{path}: no header")
    cols: dict[str, Any] = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        if name in ("phase", "stability"):
            cols[name] = raw
        else:
            cols[name] = np.array([float(x) for x in raw])
    return cols, comments


def downsample_indices(count: int, max_rows: int = MAX_ROWS) -> list[int]:
    """Uniform stride through ``range(count)`` keeping the last index."""
    if count <= max_rows:
        return list(range(count))
    stride = math.ceil((count - 1) / (max_rows - 1))
    idx = list(range(0, count - 1, stride))
    idx.append(count - 1)
    return idx


def write_trajectory(path: str | Path, traj) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "R", "phase", "i_proj"])
        for k in downsample_indices(len(traj.samples)):
            s = traj.samples[k]
            w.writerow([fmt(s.a), fmt(s.R), s.phase.value, fmt(s.i_proj)])
        fh.write(f"# termination={traj.termination.value}\n")


def write_pde(path: str | Path, traj) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "a", "R", "i_proj"])
        for s in traj.samples:
            w.writerow([fmt(s.time), fmt(s.a), fmt(s.R), fmt(s.i_proj)])
        fh.write(f"# termination={traj.termination}\n")
        off = traj.off_peak_count
        if off:
            fh.write(f"# kappa_max_off_rho_max_samples={off}\n")


# -- runners -------------------------------------------------------------------


def _simulate_one(s: Scenario, n: int) -> str:
    traj = integrate(n, s.a0, s.r0, s.env, s.step_control())
    path = s.output_for(s.out, n)
    if path:
        write_trajectory(path, traj)
    return f"n={n} termination={traj.termination.value} samples={len(traj)}"


def _pde_one(s: Scenario, n: int) -> tuple[str, bool]:
    curve = init_contour(make_rounded_polygon(n, s.a0, s.r0), s.points, s.r_seed)
    a_min = s.a_min
    if a_min is None and s.i_proj_stop is None:
        a_min = 0.1 * s.a0
    traj = evolve(
        curve,
        s.c,
        s.w0,
        a_min=a_min,
        i_proj_stop=s.i_proj_stop,
        snapshot_every=s.snapshot_every,
        contour_every=s.contour_every,
    )
    path = s.output_for(s.out, n)
    if path:
        write_pde(path, traj)
    snaps = s.output_for(s.snapshots, n)
    if snaps:
        write_snapshots(snaps, traj)
    ok = traj.termination == "STOP"
    return f"n={n} termination={traj.termination} steps={traj.steps}", ok


def _fan_out(s: Scenario, fn) -> list:
    if s.jobs > 1 and len(s.n) > 1:
        with ProcessPoolExecutor(max_workers=s.jobs) as pool:
            return list(pool.map(fn, [s] * len(s.n), s.n))
    return [fn(s, n) for n in s.n]


def run_simulate(s: Scenario) -> int:
    for line in _fan_out(s, _simulate_one):
        print(line)
    return 0


def run_pde(s: Scenario) -> int:
    status = 0
    for line, ok in _fan_out(s, _pde_one):
        print(line)
        if not ok:
            print(f"error: PDE run did not reach its stop condition ({line})", file=sys.stderr)
            status = 1
    return status


@dataclass(frozen=True)
class Comparison:
    a: np.ndarray
    i_ode: np.ndarray
    i_pde: np.ndarray
    err: float

    @property
    def passed(self) -> bool:
        return self.err < COMPARE_PASS


def _finite_sorted(a: np.ndarray, i: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keep = np.isfinite(a) & np.isfinite(i)
    a, i = a[keep], i[keep]
    order = np.argsort(a, kind="stable")
    return a[order], i[order]


def compare_series(a_ode, i_ode, a_pde, i_pde, grid: int = COMPARE_GRID) -> Comparison:
    """Max |I_ode - I_pde| on a shared size grid over the PDE's I_proj change.

    Series are given in evolution order; the normaliser uses the first and
    last PDE values.
    """
    a_ode, i_ode = np.asarray(a_ode, float), np.asarray(i_ode, float)
    a_pde, i_pde = np.asarray(a_pde, float), np.asarray(i_pde, float)
    span = abs(i_pde[-1] - i_pde[0])
    xo, yo = _finite_sorted(a_ode, i_ode)
    xp, yp = _finite_sorted(a_pde, i_pde)
    if len(xo) < 2 or len(xp) < 2:
        raise ValueError("need at least two finite samples in each series")
    lo, hi = max(xo[0], xp[0]), min(xo[-1], xp[-1])
    overlap = hi - lo
    for x, name in ((xo, "ODE"), (xp, "PDE")):
        width = x[-1] - x[0]
        if overlap <= 0 or overlap < MIN_OVERLAP * width:
            raise ValueError(f"size overlap covers less than half of the {name} range")
    a = np.linspace(hi, lo, grid)
    io, ip = np.interp(a, xo, yo), np.interp(a, xp, yp)
    gap = float(np.max(np.abs(io - ip)))
    if gap == 0:
        err = 0.0
    elif span == 0:
        err = math.inf
    else:
        err = gap / span
    return Comparison(a, io, ip, err)


def run_compare(s: Scenario) -> int:
    ode, _ = read_table(s.ode)
    pde, _ = read_table(s.pde)
    cmp = compare_series(ode["a"], ode["i_proj"], pde["a"], pde["i_proj"])
    if s.out:
        with open(s.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["a", "i_ode", "i_pde", "diff"])
            for a, x, y in zip(cmp.a, cmp.i_ode, cmp.i_pde):
                w.writerow([fmt(a), fmt(x), fmt(y), fmt(x - y)])
    print(f"err={fmt(cmp.err)} {'PASS' if cmp.passed else 'FAIL'}")
    return 0


def run_branches(s: Scenario) -> int:
    lines = ["n,p,alpha,stability"]
    for n in s.n:
        for p in s.p_grid:
            for alpha, stab in solve_alpha(n, p):
                lines.append(f"{n},{fmt(p)},{fmt(alpha)},{stab.value}")
        lines.append(f"# fold n={n} p={fmt(fold_point(n))}")
    text = "\n".join(lines) + "\n"
    if s.out:
        Path(s.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


RUNNERS = {"simulate": run_simulate, "pde": run_pde, "compare": run_compare, "branches": run_branches}


# -- render --------------------------------------------------------------------


def _contour_rows(cols, count: int) -> list[tuple[float, float, str]]:
    """Evenly spaced rows plus every row where the phase changes."""
    a, R, phase = cols["a"], cols["R"], cols["phase"]
    m = len(a)
    picks = set(np.linspace(0, m - 1, min(count, m)).round().astype(int).tolist())
    picks |= {k for k in range(1, m) if phase[k] != phase[k - 1]}
    return [(float(a[k]), float(R[k]), phase[k]) for k in sorted(picks)]


def run_render(ns: argparse.Namespace) -> int:
    if ns.mode == "RA_FLOW":
        series = []
        for path in ns.inputs:
            cols, _ = read_table(path)
            series.append((Path(path).stem, cols["a"], cols["R"]))
        text = svg.ra_flow(series, ns.r_star)
    elif ns.mode == "CONTOURS":
        from .bloore import read_snapshots

        shapes, snaps = [], []
        for path in ns.inputs:
            with open(path) as fh:
                head = fh.readline().strip()
            if head == "step,time,x,y":
                snaps.extend(p for _, _, p in read_snapshots(path))
            else:
                cols, _ = read_table(path)
                shapes.extend(_contour_rows(cols, ns.shapes))
        text = svg.contours(ns.n, shapes, snaps)
    else:
        rows, folds = [], {}
        for path in ns.inputs:
            cols, comments = read_table(path)
            rows.extend(
                (int(n), float(p), float(al), st)
                for n, p, al, st in zip(cols["n"], cols["p"], cols["alpha"], cols["stability"])
            )
            for line in comments:
                if line.startswith("fold "):
                    kv = dict(item.split("=") for item in line.split()[1:])
                    folds[int(kv["n"])] = float(kv["p"])
        text = svg.branches(rows, folds)
    Path(ns.out).write_text(text)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "render":
        try:
            ns = _build_parser().parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        try:
            return run_render(ns)
        except (OSError, ValueError, KeyError, GeometryError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    try:
        scenario = parse_scenario(argv)
    except UsageError as exc:
        cause = exc.__cause__
        if isinstance(cause, SystemExit):
            # argparse already printed its message
            return 0 if cause.code == 0 else 2
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        return RUNNERS[scenario.kind](scenario)
    except (IntegrationError, CurveError, ArithmeticError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
