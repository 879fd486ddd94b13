"""Command-line interface: ``g2 <subcommand> [options]``.

Subcommands are ``torsion``, ``flow``, ``classify``, ``hessian``, ``scan``
and ``verify``.  Parameters come from ``--ansatz --r R``,
``--general --r1 --r2 --r3`` or ``--g2params --a A --D d11,...,d33``
(plus ``--h h0,h1,h2,h3``), or from a JSON object passed with ``--params``.
Every JSON output echoes its parameters under ``"params"`` in the same
format, so it can be fed back through ``--params``.

Exit codes: 0 success, 1 failed verification, 2 argument error, 3 domain
error.  Errors are printed as one line ``ERROR <code> <detail>``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Sequence

import numpy as np

from .errors import DomainError, G2Error
from .flow import FlowState, FlowSystem, integrate, trajectory_csv
from .g2_structures import AnsatzParams, AnyParams, G2Params, GeneralParams
from .stability import classify_critical, hessian_closed, hessian_numeric
from .torsion import norm_sq, torsion_forms

DEFAULT_TOL = 1e-8


class ArgumentError(Exception):
    code = "ARGS"


# ---------------------------------------------------------------------------
# serialisation


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x + 0.0, ".17g")  # folds -0.0 into 0


def dumps(obj: Any) -> str:
    """JSON with every float written to 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def params_to_json(p: AnyParams) -> dict:
    if isinstance(p, AnsatzParams):
        return {"kind": "ansatz", "r": p.r, "h": [float(x) for x in p.h]}
    if isinstance(p, GeneralParams):
        return {"kind": "general", "r1": p.r1, "r2": p.r2, "r3": p.r3,
                "h": [float(x) for x in p.h], "convention": p.convention}
    return {"kind": "g2params", "a": p.a, "D": p.D.tolist()}


def params_from_json(d: dict) -> AnyParams:
    try:
        kind = d["kind"]
        if kind == "ansatz":
            return AnsatzParams(float(d["r"]), np.asarray(d.get("h", [1, 0, 0, 0]), float))
        if kind == "general":
            return GeneralParams(float(d["r1"]), float(d["r2"]), float(d["r3"]),
                                 np.asarray(d.get("h", [1, 0, 0, 0]), float),
                                 d.get("convention", "general"))
        if kind == "g2params":
            return G2Params(float(d["a"]), np.asarray(d["D"], float))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise ArgumentError(f"bad --params: {exc}") from None
    raise ArgumentError(f"bad --params: unknown kind {d.get('kind')!r}")


# ---------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # pragma: no cover - exercised via main
        raise ArgumentError(message)


def _floats(text: str, n: int, name: str) -> np.ndarray:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise ArgumentError(f"{name} must be {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise ArgumentError(f"{name} must have {n} entries, got {len(vals)}")
    return np.array(vals)


def _add_params(p: argparse.ArgumentParser) -> None:
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--ansatz", action="store_true", help="Ansatz family (r, h)")
    mode.add_argument("--general", action="store_true", help="diagonal family (r1, r2, r3, h)")
    mode.add_argument("--g2params", action="store_true", help="global chart (a, D)")
    p.add_argument("--params", help="parameters as JSON (or @file)")
    p.add_argument("--r", type=float)
    p.add_argument("--r1", type=float)
    p.add_argument("--r2", type=float)
    p.add_argument("--r3", type=float)
    p.add_argument("--h", default="1,0,0,0", help="unit quaternion h0,h1,h2,h3")
    p.add_argument("--convention", choices=("intro", "general"), default="general")
    p.add_argument("--a", type=float)
    p.add_argument("--D", help="3x3 matrix, row-major, 9 comma-separated numbers")


def _add_output(p: argparse.ArgumentParser, formats: Sequence[str], default: str) -> None:
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=formats, default=default)


def parse_params(ns: argparse.Namespace) -> AnyParams:
    """Validate the parameter flags and build the parameter object."""
    if ns.params:
        text = ns.params
        if text.startswith("@"):
            with open(text[1:], encoding="utf-8") as fh:
                text = fh.read()
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ArgumentError(f"--params is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ArgumentError("--params must be a JSON object")
        return params_from_json(d.get("params", d))
    h = _floats(ns.h, 4, "--h")
    if ns.ansatz:
        if ns.r is None:
            raise ArgumentError("--ansatz requires --r")
        return AnsatzParams(ns.r, h)
    if ns.general:
        if None in (ns.r1, ns.r2, ns.r3):
            raise ArgumentError("--general requires --r1, --r2 and --r3")
        return GeneralParams(ns.r1, ns.r2, ns.r3, h, ns.convention)
    if ns.g2params:
        if ns.a is None or ns.D is None:
            raise ArgumentError("--g2params requires --a and --D")
        return G2Params(ns.a, _floats(ns.D, 9, "--D").reshape(3, 3))
    raise ArgumentError("one of --ansatz, --general, --g2params or --params is required")


def tolerance() -> float:
    raw = os.environ.get("G2_TOL")
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise ArgumentError(f"G2_TOL must be a number, got {raw!r}") from None
    if not tol > 0:
        raise ArgumentError(f"G2_TOL must be positive, got {raw!r}")
    return tol


def _critical_params(p: AnyParams) -> AnsatzParams | GeneralParams:
    if isinstance(p, G2Params):
        raise DomainError("this subcommand needs --ansatz or --general parameters")
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_out(d: dict, out: str | None) -> None:
    _emit(dumps(d) + "\n", out)


def _csv(rows: list[list[Any]], header: list[str]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt_float(v) if isinstance(v, (float, np.floating)) else str(v)
                              for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def cmd_torsion(ns: argparse.Namespace) -> int:
    p = parse_params(ns)
    _json_out({"params": params_to_json(p), **torsion_forms(p).to_json()}, ns.out)
    return 0


def cmd_flow(ns: argparse.Namespace) -> int:
    p = _critical_params(parse_params(ns))
    if not ns.dt > 0 or not ns.t_max >= 0:
        raise ArgumentError("--dt must be positive and --t-max non-negative")
    if ns.sample_every < 1:
        raise ArgumentError("--sample-every must be at least 1")
    system = FlowSystem.from_params(p)
    t_max = -ns.t_max if ns.backward else ns.t_max
    traj = integrate(FlowState(system, np.asarray(p.h, float)), t_max, ns.dt, ns.sample_every)
    if ns.format == "csv":
        _emit(trajectory_csv(traj), ns.out)
    else:
        _json_out({"params": params_to_json(p), "t": traj.t, "m": traj.m,
                   "energy": traj.energy, "div_norm": traj.div_norm,
                   "max_norm_drift": traj.max_norm_drift}, ns.out)
    return 0


def cmd_classify(ns: argparse.Namespace) -> int:
    p = _critical_params(parse_params(ns))
    c = classify_critical(p, div_tol=tolerance())
    _json_out({"params": params_to_json(p), **c.to_json()}, ns.out)
    return 0


def cmd_hessian(ns: argparse.Namespace) -> int:
    p = _critical_params(parse_params(ns))
    rep = hessian_numeric(p, ns.step) if ns.numeric else hessian_closed(p)
    _json_out({"params": params_to_json(p), **rep.to_json()}, ns.out)
    return 0


def _scan_point(args: tuple[float, float, float]) -> list[Any]:
    r, h2, tol = args
    h = (math.sqrt(max(0.0, 1.0 - h2 * h2)), 0.0, h2, 0.0)
    p = AnsatzParams(r, h)
    c = classify_critical(p, div_tol=tol)
    return [float(r), float(h2), float(norm_sq(p)), float(c.div_norm), c.label]


def cmd_scan(ns: argparse.Namespace) -> int:
    if ns.general or ns.g2params:
        raise ArgumentError("scan sweeps the Ansatz family; use --ansatz or no mode flag")
    if ns.r_steps < 1 or ns.h2_steps < 1 or not 0 < ns.r_min <= ns.r_max:
        raise ArgumentError("scan needs 0 < --r-min <= --r-max and positive step counts")
    tol = tolerance()
    rs = np.linspace(ns.r_min, ns.r_max, ns.r_steps)
    h2s = np.linspace(0.0, 1.0, ns.h2_steps) if ns.h2_steps > 1 else np.array([0.0])
    grid = [(float(r), float(h2), tol) for r in rs for h2 in h2s]
    if ns.jobs > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as ex:
            rows = list(ex.map(_scan_point, grid, chunksize=32))
    else:
        rows = [_scan_point(g) for g in grid]
    header = ["r", "h2", "energy", "div_norm", "class"]
    if ns.format == "csv":
        _emit(_csv(rows, header), ns.out)
    else:
        _json_out({"columns": header, "rows": rows}, ns.out)
    return 0


def cmd_verify(ns: argparse.Namespace) -> int:
    from .verify import report, run_all
    only = None
    if ns.only:
        try:
            only = [int(x) for x in ns.only.split(",")]
        except ValueError:
            raise ArgumentError(f"--only takes criterion numbers, got {ns.only!r}") from None
        if not set(only) <= set(range(1, 10)):
            raise ArgumentError("criteria are numbered 1 to 9")
    results = run_all(jobs=ns.jobs, only=only)
    failed = [r.number for r in results if not r.passed]
    text = report(results) + f"\n{len(results) - len(failed)}/{len(results)} criteria passed\n"
    _emit(text, ns.out)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="g2", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("torsion", help="torsion forms and full torsion tensor (JSON)")
    _add_params(p)
    _add_output(p, ("json",), "json")
    p.set_defaults(func=cmd_torsion)

    p = sub.add_parser("flow", help="integrate the isometric flow (CSV)")
    _add_params(p)
    _add_output(p, ("csv", "json"), "csv")
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--backward", action="store_true", help="integrate towards t = -t_max")
    p.add_argument("--sample-every", type=int, default=1)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("classify", help="critical-set classification (JSON)")
    _add_params(p)
    _add_output(p, ("json",), "json")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("hessian", help="reduced Hessian, index and nullity (JSON)")
    _add_params(p)
    _add_output(p, ("json",), "json")
    p.add_argument("--numeric", action="store_true", help="finite differences instead of closed form")
    p.add_argument("--step", type=float, default=1e-3)
    p.set_defaults(func=cmd_hessian)

    p = sub.add_parser("scan", help="energy, divergence and class over an (r, h2) grid")
    _add_params(p)
    _add_output(p, ("csv", "json"), "csv")
    p.add_argument("--r-min", type=float, default=0.4)
    p.add_argument("--r-max", type=float, default=2.2)
    p.add_argument("--r-steps", type=int, default=64)
    p.add_argument("--h2-steps", type=int, default=32)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify", help="run the acceptance suite")
    _add_output(p, ("text",), "text")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        if getattr(ns, "jobs", 1) < 1:
            raise ArgumentError("--jobs must be at least 1")
        return ns.func(ns)
    except ArgumentError as exc:
        print(f"ERROR {exc.code} {exc}", file=sys.stderr)
        return 2
    except G2Error as exc:
        print(f"ERROR {exc.code} {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"ERROR IO {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
