"""Scenario-driven command-line front end.

Subcommands
-----------
run <scenario.json> [--threads N] [--out PATH]
    Evaluate the scenario's kernel sweep (and optional coherence block)
    and write a CSV results table.
compare <results.csv>
    Per-point deviations between the methods present in a results table,
    emitted as a JSON summary on stdout.
selftest
    Quick run of the core invariants (Wronskian, spectra vs quadrature,
    closed forms vs oracles); exits nonzero on any failure.

Scenario file (JSON, SI units)::

    {
      "params": {"cn2": 1e-15, "wavelength": 1e-6, "w0": 0.01},
      "z_grid": [0.0, 100.0, 200.0],
      "eval_points": [
        {"x": [0.005, 0.0], "a_d": [40.0, 10.0]},
        {"x1": [...], "a_d": [...], "x2": [...], "b_d": [...]}
      ],
      "methods": ["perturbative", "modified", "oracle"],
      "output_path": "results.csv",          // optional, --out overrides
      "ode_tol": 1e-10,                       // optional
      "coherence": {                          // optional block
        "z": 300.0,
        "axis_points": [-0.01, 0.0, 0.01],
        "kernel": "perturbative",             // or "free" / "modified"
        "rtol": 1e-7
      }
    }

Output CSV: one `#`-prefixed JSON header line (scenario echo plus the
z-independent normalized parameters), then a column-header row and data
rows.  Formatting is fixed and rows carry no timestamps, so identical
scenarios produce byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure in a
requested method.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError, QuadratureError, StepSizeError
from .ipe import PhasePoint, TwoPhotonPoint, make_k_single_fn, make_k_two_fn
from .oracle import integrate_pointwise
from .propagate import GaussianInput, free_space_kernel, observable_coherence
from .solutions import (
    METHOD_MODIFIED,
    METHOD_ORACLE,
    METHOD_PERTURBATIVE,
    modified_position_kernel_fn,
    modified_solution,
    perturbative_kernel,
    perturbative_kernel_two,
    perturbative_position_kernel_fn,
)
from .turbulence import TurbulenceParams, normalize

_METHODS = (METHOD_PERTURBATIVE, METHOD_MODIFIED, METHOD_ORACLE)
_COLUMNS = "kind,method,point_index,aux_index,z,t,value_re,value_im,valid,status"


@dataclass
class Scenario:
    params: TurbulenceParams
    z_grid: list[float]
    eval_points: list  # PhasePoint | TwoPhotonPoint
    methods: list[str]
    output_path: str | None = None
    ode_tol: float = 1e-10
    coherence: dict | None = None
    raw: dict = field(default_factory=dict)


def _cfg_get(obj, key, typ, where, required=True, default=None):
    if key not in obj:
        if required:
            raise ConfigError(f"missing field '{key}' in {where}")
        return default
    val = obj[key]
    if typ is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, typ):
        raise ConfigError(f"field '{key}' in {where} must be {typ.__name__}")
    return val


def _parse_point(obj, idx):
    where = f"eval_points[{idx}]"
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    try:
        if "x1" in obj or "b_d" in obj:
            return TwoPhotonPoint(obj["x1"], obj["a_d"], obj["x2"], obj["b_d"])
        return PhasePoint(obj["x"], obj["a_d"])
    except KeyError as exc:
        raise ConfigError(f"missing field {exc} in {where}") from None
    except (TypeError, ValueError, DomainError) as exc:
        raise ConfigError(f"bad vector in {where}: {exc}") from None


def parse_scenario(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ConfigError("scenario root must be a JSON object")
    pobj = _cfg_get(doc, "params", dict, "scenario")
    try:
        params = TurbulenceParams(
            cn2=_cfg_get(pobj, "cn2", float, "params"),
            wavelength=_cfg_get(pobj, "wavelength", float, "params"),
            w0=_cfg_get(pobj, "w0", float, "params"),
        )
    except DomainError as exc:
        raise ConfigError(f"invalid params: {exc}") from None
    z_grid = _cfg_get(doc, "z_grid", list, "scenario")
    if not z_grid or not all(isinstance(z, (int, float)) for z in z_grid):
        raise ConfigError("z_grid must be a non-empty list of numbers")
    z_grid = [float(z) for z in z_grid]
    if z_grid[0] < 0 or any(b <= a for a, b in zip(z_grid, z_grid[1:])):
        raise ConfigError("z_grid must be strictly increasing and start >= 0")
    pts_obj = _cfg_get(doc, "eval_points", list, "scenario")
    points = [_parse_point(p, i) for i, p in enumerate(pts_obj)]
    methods = _cfg_get(doc, "methods", list, "scenario")
    if not methods:
        raise ConfigError("at least one method must be selected")
    for m in methods:
        if m not in _METHODS:
            raise ConfigError(f"unknown method '{m}' (choose from {_METHODS})")
    coh = doc.get("coherence")
    if coh is not None:
        if not isinstance(coh, dict):
            raise ConfigError("coherence must be an object")
        _cfg_get(coh, "z", float, "coherence")
        ap = _cfg_get(coh, "axis_points", list, "coherence")
        if not ap or not all(isinstance(v, (int, float)) for v in ap):
            raise ConfigError("coherence.axis_points must be a list of numbers")
        kern = coh.get("kernel", "free")
        if kern not in ("free", METHOD_PERTURBATIVE, METHOD_MODIFIED):
            raise ConfigError(f"unknown coherence kernel '{kern}'")
    return Scenario(
        params=params,
        z_grid=z_grid,
        eval_points=points,
        methods=list(methods),
        output_path=doc.get("output_path"),
        ode_tol=float(doc.get("ode_tol", 1e-10)),
        coherence=coh,
        raw=doc,
    )


def _fmt(v: float) -> str:
    if math.isnan(v):
        return "nan"
    return f"{v:.16e}"


@dataclass
class Row:
    kind: str
    method: str
    point_index: int
    aux_index: int
    z: float
    t: float
    value_re: float
    value_im: float
    valid: bool
    status: str

    def to_csv(self) -> str:
        return ",".join(
            [
                self.kind,
                self.method,
                str(self.point_index),
                str(self.aux_index),
                _fmt(self.z),
                _fmt(self.t),
                _fmt(self.value_re),
                _fmt(self.value_im),
                "1" if self.valid else "0",
                self.status,
            ]
        )


def _kernel_rows(scenario: Scenario, point_idx: int, method: str) -> list[Row]:
    params = scenario.params
    point = scenario.eval_points[point_idx]
    two = isinstance(point, TwoPhotonPoint)
    rows = []

    ode_vals = None
    if method == METHOD_ORACLE:
        z_pos = [z for z in scenario.z_grid if z > 0]
        if z_pos and params.cn2 > 0:
            kfun = make_k_two_fn(point, params) if two else make_k_single_fn(point, params)
            try:
                sol = integrate_pointwise(kfun, z_pos[-1], scenario.ode_tol, z_eval=z_pos)
                ode_vals = dict(zip(z_pos, sol.values))
            except StepSizeError as exc:
                ode_vals = exc

    for z in scenario.z_grid:
        t_norm = normalize(params, z).t
        value, valid, status = math.nan, False, "ok"
        try:
            if method == METHOD_ORACLE:
                if z == 0.0 or params.cn2 == 0.0:
                    value, valid = 1.0, True
                elif isinstance(ode_vals, StepSizeError):
                    raise ode_vals
                else:
                    value, valid = float(ode_vals[z]), True
            elif method == METHOD_PERTURBATIVE:
                kv = (
                    perturbative_kernel_two(z, point, params)
                    if two
                    else perturbative_kernel(z, point, params)
                )
                value, valid = kv.value, kv.valid
            elif method == METHOD_MODIFIED:
                if two:
                    raise DomainError("modified solution covers single photons only")
                kv = modified_solution(z, point, params)
                value, valid = kv.value, kv.valid
        except DomainError as exc:
            status = f"domain_error: {exc}"
        except (QuadratureError, StepSizeError) as exc:
            status = f"numerical_error: {exc}"
        rows.append(
            Row("kernel", method, point_idx, -1, z, t_norm, value, 0.0, valid, status)
        )
    return rows


def _coherence_rows(scenario: Scenario) -> list[Row]:
    coh = scenario.coherence
    params = scenario.params
    z = float(coh["z"])
    axis = [float(v) for v in coh["axis_points"]]
    kern_name = coh.get("kernel", "free")
    rtol = float(coh.get("rtol", 1e-7))
    if kern_name == "free":
        kfn = free_space_kernel
    elif kern_name == METHOD_PERTURBATIVE:
        kfn = perturbative_position_kernel_fn(params)
    else:
        kfn = modified_position_kernel_fn(params)
    inp = GaussianInput(w0=params.w0)
    t_norm = normalize(params, z).t
    rows = []
    cache: dict[tuple[int, int], complex] = {}
    for i, xi in enumerate(axis):
        for j, xj in enumerate(axis):
            status = "ok"
            if (j, i) in cache:
                val = np.conj(cache[(j, i)])
            else:
                try:
                    val = observable_coherence(
                        (xi, 0.0), (xj, 0.0), z, kfn, inp, params, rtol=rtol
                    )
                except DomainError as exc:
                    val, status = complex(math.nan, math.nan), f"domain_error: {exc}"
                except QuadratureError as exc:
                    val, status = complex(math.nan, math.nan), f"numerical_error: {exc}"
            if status == "ok":
                cache[(i, j)] = val
            rows.append(
                Row(
                    "coherence",
                    kern_name,
                    i,
                    j,
                    z,
                    t_norm,
                    float(np.real(val)),
                    float(np.imag(val)),
                    status == "ok",
                    status,
                )
            )
    return rows


def run_scenario(scenario: Scenario, threads: int = 1) -> list[Row]:
    """Evaluate every (point, method, z) combination; deterministic order."""
    tasks = [
        (idx, method)
        for idx in range(len(scenario.eval_points))
        for method in scenario.methods
    ]
    if threads > 1 and tasks:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(lambda im: _kernel_rows(scenario, im[0], im[1]), tasks)
            )
    else:
        results = [_kernel_rows(scenario, i, m) for i, m in tasks]
    rows = [row for chunk in results for row in chunk]
    if scenario.coherence is not None:
        rows.extend(_coherence_rows(scenario))
    return rows


def write_results(scenario: Scenario, rows: list[Row], stream) -> None:
    norm = normalize(scenario.params)
    header = {
        "format": "nmipe-results",
        "version": __version__,
        "columns": _COLUMNS.split(","),
        "scenario": scenario.raw,
        "normalized": {
            "theta": norm.theta,
            "turb_T": norm.turb_T,
            "g": norm.g,
            "beta": norm.beta,
            "k": norm.k,
        },
    }
    stream.write("# " + json.dumps(header, sort_keys=True) + "\n")
    stream.write(_COLUMNS + "\n")
    for row in rows:
        stream.write(row.to_csv() + "\n")


def read_results(path: str):
    """Parse a results CSV back into (header dict, list of row dicts)."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ConfigError(f"{path}:1: missing JSON header line")
        header = json.loads(first[1:])
        cols = fh.readline().strip().split(",")
        if cols != _COLUMNS.split(","):
            raise ConfigError(f"{path}:2: unexpected column header")
        rows = []
        for ln, line in enumerate(fh, start=3):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",", len(cols) - 1)
            if len(parts) != len(cols):
                raise ConfigError(f"{path}:{ln}: expected {len(cols)} fields")
            rows.append(dict(zip(cols, parts)))
    return header, rows


def compare_report(rows) -> dict:
    """Pairwise per-point deviations between methods in a results table.

    Accepts parsed row dicts; only 'kernel' rows with status ok enter the
    comparison.
    """
    ok = [r for r in rows if r["kind"] == "kernel" and r["status"] == "ok"]
    methods = sorted({r["method"] for r in ok})
    if len(methods) < 2:
        raise ConfigError("compare requires at least two methods in the table")
    by_key: dict[tuple[str, str], dict[str, float]] = {}
    for r in ok:
        by_key.setdefault((r["point_index"], r["z"]), {})[r["method"]] = float(
            r["value_re"]
        )
    pairs = {}
    for i, ma in enumerate(methods):
        for mb in methods[i + 1 :]:
            devs = []
            for vals in by_key.values():
                if ma in vals and mb in vals:
                    a, b = vals[ma], vals[mb]
                    devs.append(abs(a - b) / max(abs(a), abs(b), 1e-300))
            if devs:
                pairs[f"{ma}_vs_{mb}"] = {
                    "points": len(devs),
                    "max_rel": max(devs),
                    "mean_rel": sum(devs) / len(devs),
                }
    return {"methods": methods, "pairs": pairs}


# ---------------------------------------------------------------------------
# selftest

def _selftest() -> int:
    import time

    from fractions import Fraction

    from .oracle import quad_adaptive_1d, quad_adaptive_2d
    from .specfun import bessel_j, bessel_y
    from .solutions import s_integral, synthetic_point_for
    from .turbulence import phi_1

    failures = 0

    def check(name, got, want, tol):
        nonlocal failures
        rel = abs(got - want) / max(abs(want), 1e-300)
        ok = rel <= tol
        if not ok:
            failures += 1
        print(f"{'PASS' if ok else 'FAIL'} {name}: rel dev {rel:.2e} (tol {tol:.0e})")

    t0 = time.time()
    for zz in (0.1, 1.0, 5.0, 20.0):
        w = bessel_j(Fraction(3, 8), zz) * bessel_y(Fraction(-5, 8), zz) - bessel_y(
            Fraction(3, 8), zz
        ) * bessel_j(Fraction(-5, 8), zz)
        check(f"wronskian z={zz}", w, 2.0 / (math.pi * zz), 1e-10)

    pref = 0.033 * (2 * math.pi) ** 3 * (2 * math.pi) ** (-11.0 / 3.0)
    ref = quad_adaptive_1d(
        lambda c: pref * (1.0 + c * c) ** (-11.0 / 6.0), -60.0, 60.0, 1e-12
    )
    ref += pref * 2.0 * (3.0 / 8.0) * 60.0 ** (-8.0 / 3.0)  # algebraic tail
    check("phi_1 closed form vs quadrature (|a|=1)", phi_1(1.0, 1.0), ref, 1e-6)

    rng = np.random.default_rng(0)
    for n in range(3):
        x = rng.normal(size=2)
        ad = rng.normal(size=2)
        pt = PhasePoint(x, ad)
        z = 1.0 + n
        got = s_integral(z, pt, 1.0)

        def f(z2, z1):
            vx = z1 * ad[0] + x[0]
            vy = z1 * ad[1] + x[1]
            return (vx * vx + vy * vy) ** (1.0 / 3.0)

        want = quad_adaptive_2d(
            f, ((0.0, z), (0.0, lambda z2: z2)), 1e-9 * z * z, initial_split=4
        )
        check(f"s_integral vs quadrature #{n}", got, want, 1e-6)

    for alpha, zeta, zz in ((1.0, 1.0, 1.0), (0.4, 2.0, 2.5), (2.0, 0.7, 1.5)):
        pt, prm = synthetic_point_for(alpha, zeta)
        got = modified_solution(zz, pt, prm).value
        sol = integrate_pointwise(
            lambda s: -alpha * alpha * (s + zeta) ** (2.0 / 3.0), zz, 1e-12, z_eval=[zz]
        )
        check(f"modified vs ODE (a={alpha}, z={zz})", got, sol.values[-1], 1e-6)

    for _ in range(10):
        prm = TurbulenceParams(
            cn2=10.0 ** rng.uniform(-18, -13),
            wavelength=10.0 ** rng.uniform(-6.5, -5.5),
            w0=10.0 ** rng.uniform(-3, -1),
        )
        nz = normalize(prm)
        beta2 = 3.0 * math.sqrt(nz.g) / (4.0 * math.pi * prm.w0 ** (7.0 / 3.0))
        check("beta dual formula", nz.beta, beta2, 1e-12)

    print(f"selftest finished in {time.time() - t0:.1f}s, {failures} failure(s)")
    return 1 if failures else 0


# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nmipe", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="evaluate a scenario file")
    p_run.add_argument("scenario", help="path to scenario JSON")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--out", default=None, help="output CSV path (overrides scenario)")

    p_cmp = sub.add_parser("compare", help="summarize method deviations in a results CSV")
    p_cmp.add_argument("results", help="path to results CSV")

    sub.add_parser("selftest", help="run the quick invariant suite")

    args = parser.parse_args(argv)

    if args.command == "selftest":
        return _selftest()

    if args.command == "compare":
        try:
            _, rows = read_results(args.results)
            report = compare_report(rows)
        except (ConfigError, OSError, json.JSONDecodeError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        print()
        return 0

    # run
    try:
        with open(args.scenario, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: scenario JSON at line {exc.lineno}: {exc.msg}", file=sys.stderr)
        return 2
    try:
        scenario = parse_scenario(doc)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2

    rows = run_scenario(scenario, threads=args.threads)

    buf = io.StringIO()
    write_results(scenario, rows, buf)
    out_path = args.out or scenario.output_path
    if out_path is None or out_path == "-":
        sys.stdout.write(buf.getvalue())
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())

    if any(row.status.startswith("numerical_error") for row in rows):
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
