"""Command-line front end.

    multicubic identities --n-max 12
    multicubic verify --model cubic.json --grid int:-3..3
    multicubic classify --model candidate.json
    multicubic stabilize --model noisy.json --alpha 1 --delta 1/100 --L 40
    multicubic bound --n 1 --alpha 5 --delta 1 --points "1;2"
    multicubic hyper --model m.json --p 1,1 --delta 1
    multicubic remark21
    multicubic run request.json

Exit status: 0 when the verdict holds, 1 when it fails, 2 on usage,
parse or I/O errors.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import _numeric as num
from . import report as rep
from .combinatorics import identity_total_weight, identity_w1, identity_w2
from .equation import (
    EquationSample,
    classify,
    default_grid,
    integer_grid,
    random_grid,
    remark21_demo,
    residual_report,
)
from .errors import DivergenceError, ModelParseError, MulticubicError
from .mappings import model_from_dict
from .stability import (
    DEFAULT_ITERATIONS,
    DEFAULT_SERIES_TERMS,
    DEFAULT_TOLERANCE,
    StabilizationConfig,
    choose_beta,
    hyperstability_check,
    phi_closed_form,
    phi_series,
    power_control,
    product_control,
    stabilize,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(MulticubicError):
    pass


@dataclass
class RunReport:
    request: dict
    payload: dict
    status: int
    table: tuple = None
    duration: float = None

    def to_dict(self):
        out = {
            "tool": "multicubic",
            "version": __version__,
            "request": self.request,
            "payload": self.payload,
            "status": self.status,
        }
        if self.duration is not None:
            out["durationSeconds"] = round(self.duration, 6)
        return out


# -- parameter parsing ---------------------------------------------------------

def _rational(value, field):
    try:
        return num.parse_rational(value, field)
    except ModelParseError as exc:
        raise UsageError(str(exc)) from None


def _int(value, field):
    if isinstance(value, bool):
        raise UsageError(f"{field}: expected an integer, got {value!r}")
    try:
        return int(value)
    except (TypeError, ValueError):
        raise UsageError(f"{field}: expected an integer, got {value!r}") from None


def _coord(value, field):
    if isinstance(value, list):
        return tuple(_rational(v, f"{field}[{i}]") for i, v in enumerate(value))
    return _rational(value, field)


def parse_points(spec, n, field="points"):
    """Points as a JSON list of coordinate arrays, ``lin:A..B:K`` or ``"a,b;c,d"``."""
    if isinstance(spec, list):
        points = []
        for i, p in enumerate(spec):
            if not isinstance(p, list):
                p = [p]
            points.append(tuple(_coord(c, f"{field}[{i}][{k}]") for k, c in enumerate(p)))
    elif isinstance(spec, str) and spec.startswith("lin:"):
        try:
            span, count = spec[4:].rsplit(":", 1)
            lo, hi = span.split("..")
            count = int(count)
        except ValueError:
            raise UsageError(f"{field}: expected lin:A..B:K, got {spec!r}") from None
        lo, hi = _rational(lo, field), _rational(hi, field)
        if count < 1:
            raise UsageError(f"{field}: need at least one point")
        if count == 1:
            values = [lo]
        else:
            values = [lo + (hi - lo) * Fraction(i, count - 1) for i in range(count)]
        points = [tuple(p) for p in itertools.product(values, repeat=n)]
    elif isinstance(spec, str):
        points = [
            tuple(_rational(c, field) for c in chunk.split(","))
            for chunk in spec.split(";") if chunk.strip()
        ]
    else:
        raise UsageError(f"{field}: unsupported point specification {spec!r}")
    for i, p in enumerate(points):
        if len(p) != n:
            raise UsageError(f"{field}[{i}]: point has arity {len(p)}, model expects {n}")
    return points


def parse_grid(spec, n, dim=1, seed=0, field="grid"):
    """Grid specs: ``default``, ``int:LO..HI``, ``random:COUNT[:SEED]`` joined by '+'."""
    if isinstance(spec, list):
        samples = []
        for i, entry in enumerate(spec):
            if not isinstance(entry, dict) or "x1" not in entry or "x2" not in entry:
                raise UsageError(f"{field}[{i}]: expected an object with x1 and x2")
            x1 = parse_points([entry["x1"]], n, f"{field}[{i}].x1")[0]
            x2 = parse_points([entry["x2"]], n, f"{field}[{i}].x2")[0]
            samples.append(EquationSample(x1, x2))
        return samples
    if not isinstance(spec, str):
        raise UsageError(f"{field}: unsupported grid specification {spec!r}")
    samples = []
    for part in spec.split("+"):
        part = part.strip()
        try:
            if part == "default":
                samples += default_grid(n, dim=dim, seed=seed)
            elif part.startswith("int:"):
                lo, hi = part[4:].split("..")
                samples += integer_grid(n, int(lo), int(hi), dim=dim)
            elif part.startswith("random:"):
                bits = part[7:].split(":")
                count = int(bits[0])
                rseed = int(bits[1]) if len(bits) > 1 else seed
                samples += random_grid(n, count, rseed, dim=dim)
            else:
                raise ValueError
        except ValueError:
            raise UsageError(f"{field}: cannot parse grid component {part!r}") from None
    if not samples:
        raise UsageError(f"{field}: grid is empty")
    return samples


def _load_model(params, ctx):
    ref = params.get("model")
    if ref is None:
        raise UsageError("model: required")
    if isinstance(ref, dict):
        data, where = ref, "model"
    else:
        path = Path(ref)
        if not path.is_absolute() and ctx.get("base_dir"):
            path = Path(ctx["base_dir"]) / path
        try:
            text = path.read_text()
        except OSError as exc:
            raise OSError(f"cannot read model {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelParseError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}")
        where = str(path)
    model = model_from_dict(data, where)
    mode = params.get("mode") or (data.get("mode") if isinstance(data, dict) else None)
    mode = mode or num.default_mode()
    if mode not in num.MODES:
        raise UsageError(f"mode: must be one of {num.MODES}, got {mode!r}")
    params["mode"] = mode
    return model.with_mode(mode)


# -- commands ------------------------------------------------------------------

def cmd_identities(params, ctx):
    n_max = _int(params["n_max"], "n_max")
    if n_max < 1:
        raise UsageError("n_max: must be >= 1")
    rows, table, ok = [], [], True
    for n in range(1, n_max + 1):
        checks = {
            "total": identity_total_weight(n),
            "w2": identity_w2(n),
            "w1": identity_w1(n),
        }
        entry = {"n": n}
        for key, c in checks.items():
            entry[key] = {"computed": str(c.computed), "expected": str(c.expected), "equal": c.equal}
            ok = ok and c.equal
        rows.append(entry)
        table.append([n] + [v for c in checks.values() for v in (c.computed, c.expected)]
                     + [all(c.equal for c in checks.values())])
    header = ["n", "total", "total_expected", "w2", "w2_expected", "w1", "w1_expected", "equal"]
    return {"rows": rows, "allEqual": ok}, EXIT_OK if ok else EXIT_FAIL, (header, table)


def cmd_verify(params, ctx):
    model = _load_model(params, ctx)
    grid = parse_grid(params["grid"], model.n, model.coord_dim, _int(params["seed"], "seed"))
    tol = float(params["tolerance"])
    report = residual_report(model, grid)
    if model.mode == num.EXACT:
        ok = report.max_residual == 0
    else:
        ok = report.max_residual <= tol
    payload = {
        "verdict": "Vanishes" if ok else "Nonzero",
        "maxResidual": rep.scalar(report.max_residual),
        "worstSample": rep.sample(report.worst_sample),
        "worstResidual": rep.vector(report.worst_residual),
        "samples": report.samples,
    }
    return payload, EXIT_OK if ok else EXIT_FAIL, None


def _verdict_payload(v):
    return {
        "verdict": v.kind,
        "samples": v.samples_checked,
        "sample": rep.sample(v.sample),
        "variable": v.variable,
        "point": rep.vector(v.point),
        "residual": rep.vector(v.residual),
    }


def cmd_classify(params, ctx):
    model = _load_model(params, ctx)
    grid = parse_grid(params["grid"], model.n, model.coord_dim, _int(params["seed"], "seed"))
    verdict = classify(model, grid)
    return _verdict_payload(verdict), EXIT_OK if verdict.ok else EXIT_FAIL, None


def _control(params, n):
    delta = _rational(params["delta"], "delta")
    if params.get("p") is not None:
        return product_control(delta, _exponent_matrix(params["p"], n))
    if params.get("alpha") is None:
        raise UsageError("alpha: required for a power-type control")
    return power_control(delta, _rational(params["alpha"], "alpha"))


def _exponent_matrix(spec, n):
    if isinstance(spec, str):
        values = [_rational(v, "p") for v in spec.replace(";", ",").split(",") if v.strip()]
    elif isinstance(spec, list):
        flat = [v for row in spec for v in (row if isinstance(row, list) else [row])]
        values = [_rational(v, "p") for v in flat]
    else:
        raise UsageError(f"p: unsupported exponent specification {spec!r}")
    if len(values) != 2 * n:
        raise UsageError(f"p: need 2n = {2 * n} exponents, got {len(values)}")
    return (tuple(values[:n]), tuple(values[n:]))


def _row_payload(r):
    return {
        "x": rep.vector(r.x),
        "f": rep.vector(r.f),
        "C": rep.vector(r.C),
        "phiSeries": rep.scalar(r.phi_series),
        "phiPaper": rep.scalar(r.phi_paper),
        "error": rep.scalar(r.error),
        "boundOK": r.bound_ok,
        "converged": r.converged,
        "note": r.note,
    }


def cmd_stabilize(params, ctx):
    model = _load_model(params, ctx)
    n = model.n
    if params.get("points") is None:
        params["points"] = "lin:-2..2:100" if n == 1 else "lin:-2..2:5"
    points = parse_points(params["points"], n)
    grid = parse_grid(params["grid"], n, model.coord_dim, _int(params["seed"], "seed"))
    phi = _control(params, n)
    beta = params.get("beta")
    cfg = StabilizationConfig(
        beta=None if beta is None else _int(beta, "beta"),
        iterations=_int(params["L"], "L"),
        mode=params["mode"],
        tolerance=float(params["tolerance"]),
        points=tuple(points),
        grid=tuple(grid),
        series_terms=_int(params["series_terms"], "series_terms"),
    )
    result = stabilize(model, phi, cfg)
    hyp = result.hypothesis
    payload = {
        "beta": result.beta,
        "L": result.iterations,
        "mode": result.mode,
        "pathway": result.pathway,
        "rows": [_row_payload(r) for r in result.rows],
        "recoveredCoefficient": rep.vector(result.recovered_coefficient),
        "saturated": result.saturated,
        "verdicts": {
            "boundSatisfied": result.bound_satisfied,
            "converged": result.converged,
            "hypothesisCertified": None if hyp is None else hyp.certified,
        },
    }
    if hyp is not None:
        payload["hypothesis"] = {
            "samples": hyp.samples,
            "violations": hyp.violations,
            "firstViolation": rep.sample(hyp.first_violation),
        }
    if result.hyperstability is not None:
        payload["hyperstability"] = result.hyperstability.kind
    ok = result.bound_satisfied and result.converged
    return payload, EXIT_OK if ok else EXIT_FAIL, (rep.STABILIZATION_HEADER, result.rows)


def cmd_bound(params, ctx):
    n = _int(params["n"], "n")
    if n < 1:
        raise UsageError("n: must be >= 1")
    if params.get("points") is None:
        raise UsageError("points: required")
    alpha = _rational(params["alpha"], "alpha")
    delta = _rational(params["delta"], "delta")
    mode = params.get("mode") or num.default_mode()
    params["mode"] = mode
    beta = params.get("beta")
    beta = choose_beta(alpha, n) if beta is None else _int(beta, "beta")
    phi = power_control(delta, alpha)
    terms = _int(params["series_terms"], "series_terms")
    rows, table, ok = [], [], True
    for x in parse_points(params["points"], n):
        series = phi_series(x, phi, beta, n, terms, mode)
        paper = phi_closed_form(x, delta, alpha, n, "paper")
        exact = phi_closed_form(x, delta, alpha, n, "series")
        ok = ok and not series.diverged
        rows.append({
            "x": rep.vector(x),
            "seriesPartial": rep.scalar(series.partial),
            "seriesTotal": rep.scalar(series.total),
            "diverged": series.diverged,
            "closedPaper": rep.scalar(paper),
            "closedSeries": rep.scalar(exact),
        })
        table.append([x, series.partial, series.total, paper, exact])
    header = ["x", "series_partial", "series_total", "closed_paper", "closed_series"]
    payload = {"beta": beta, "n": n, "rows": rows}
    return payload, EXIT_OK if ok else EXIT_FAIL, (header, table)


def cmd_hyper(params, ctx):
    model = _load_model(params, ctx)
    if params.get("p") is None:
        raise UsageError("p: required")
    phi = product_control(_rational(params["delta"], "delta"), _exponent_matrix(params["p"], model.n))
    grid = parse_grid(params["grid"], model.n, model.coord_dim, _int(params["seed"], "seed"))
    verdict = hyperstability_check(model, phi, grid)
    payload = {
        "verdict": verdict.kind,
        "sample": rep.sample(verdict.sample),
        "residual": rep.vector(verdict.residual),
        "bound": rep.scalar(verdict.bound),
        "counterexampleToTheorem": verdict.counterexample,
    }
    return payload, EXIT_OK if verdict.ok else EXIT_FAIL, None


def cmd_remark21(params, ctx):
    demo = remark21_demo()
    payload = {
        "powerConditionHolds": demo.power_condition.holds,
        "powerConditionWorstRelative": rep.scalar(demo.power_condition.worst_relative),
        "gridSize": demo.grid_size,
        "junKimResidualAtZero": rep.vector(demo.residual_at_zero),
        "junKimResidualAtOriginPair": rep.vector(demo.residual_at_origin_pair),
        "hAtDoubled": rep.vector(demo.doubled_value),
        "hAtBase": rep.vector(demo.base_value),
        "classification": _verdict_payload(demo.verdict),
        "confirmed": demo.confirmed,
    }
    return payload, EXIT_OK if demo.confirmed else EXIT_FAIL, None


_GRID_DEFAULTS = {"grid": "default", "seed": 0, "mode": None}

COMMANDS = {
    "identities": (cmd_identities, {"n_max": 12}),
    "verify": (cmd_verify, {"model": None, "tolerance": DEFAULT_TOLERANCE, **_GRID_DEFAULTS}),
    "classify": (cmd_classify, {"model": None, **_GRID_DEFAULTS}),
    "stabilize": (cmd_stabilize, {
        "model": None, "alpha": None, "delta": None, "p": None, "beta": None,
        "L": DEFAULT_ITERATIONS, "points": None, "series_terms": DEFAULT_SERIES_TERMS,
        "tolerance": DEFAULT_TOLERANCE, **_GRID_DEFAULTS,
    }),
    "bound": (cmd_bound, {
        "n": None, "alpha": None, "delta": None, "beta": None, "points": None,
        "series_terms": DEFAULT_SERIES_TERMS, "mode": None,
    }),
    "hyper": (cmd_hyper, {"model": None, "p": None, "delta": 1, **_GRID_DEFAULTS}),
    "remark21": (cmd_remark21, {}),
}

REQUIRED = {
    "verify": ("model",),
    "classify": ("model",),
    "stabilize": ("model", "delta"),
    "bound": ("n", "alpha", "delta", "points"),
    "hyper": ("model", "p"),
}


def _normalize_request(request):
    if not isinstance(request, dict):
        raise UsageError("request: must be a JSON object")
    command = request.get("command")
    if command not in COMMANDS:
        raise UsageError(f"command: must be one of {sorted(COMMANDS)}, got {command!r}")
    defaults = COMMANDS[command][1]
    unknown = sorted(set(request) - set(defaults) - {"command"})
    if unknown:
        raise UsageError(f"request.{unknown[0]}: unknown field for command {command!r}")
    params = dict(defaults)
    params.update({k: v for k, v in request.items() if k != "command" and v is not None})
    for key in REQUIRED.get(command, ()):
        if params.get(key) is None:
            raise UsageError(f"request.{key}: required for command {command!r}")
    return command, params


def _echo(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_echo(v) for v in value]
    if isinstance(value, dict):
        return {k: _echo(v) for k, v in value.items()}
    return value


def run(request, base_dir=None, timing=False):
    """Execute one request dict and return its RunReport."""
    started = time.perf_counter()
    command, params = _normalize_request(request)
    handler = COMMANDS[command][0]
    payload, status, table = handler(params, {"base_dir": base_dir})
    echo = {"command": command, **{k: _echo(v) for k, v in params.items()}}
    duration = time.perf_counter() - started if timing else None
    return RunReport(echo, payload, status, table, duration)


# -- argument parsing ------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--timing", action="store_true",
                        help="include wall-clock duration (breaks byte determinism)")

    def model_opts(p, grid=True):
        p.add_argument("--model", required=True, help="model file (JSON)")
        p.add_argument("--mode", choices=num.MODES)
        if grid:
            p.add_argument("--grid", default="default",
                           help="default | int:LO..HI | random:COUNT[:SEED], joined by '+'")
            p.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(prog="multicubic", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identities", parents=[common], help="binomial weight identities")
    p.add_argument("--n-max", dest="n_max", type=int, default=12)

    p = sub.add_parser("verify", parents=[common], help="max |D f| over a grid")
    model_opts(p)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)

    p = sub.add_parser("classify", parents=[common], help="grid-level multi-cubic classifier")
    model_opts(p)

    p = sub.add_parser("stabilize", parents=[common], help="fixed-point approximant and bounds")
    model_opts(p)
    p.add_argument("--alpha")
    p.add_argument("--delta", required=True)
    p.add_argument("--p", help="product-control exponents p11..p1n,p21..p2n")
    p.add_argument("--beta", type=int, choices=(-1, 1))
    p.add_argument("--L", dest="L", type=int, default=DEFAULT_ITERATIONS)
    p.add_argument("--points", help="lin:A..B:K | 'a,b;c,d'")
    p.add_argument("--series-terms", dest="series_terms", type=int, default=DEFAULT_SERIES_TERMS)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)

    p = sub.add_parser("bound", parents=[common], help="Phi series versus closed forms")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", required=True)
    p.add_argument("--delta", required=True)
    p.add_argument("--beta", type=int, choices=(-1, 1))
    p.add_argument("--points", required=True)
    p.add_argument("--series-terms", dest="series_terms", type=int, default=DEFAULT_SERIES_TERMS)
    p.add_argument("--mode", choices=num.MODES)

    p = sub.add_parser("hyper", parents=[common], help="hyperstability check")
    model_opts(p)
    p.add_argument("--p", required=True, help="exponents p11..p1n,p21..p2n")
    p.add_argument("--delta", default="1")

    sub.add_parser("remark21", parents=[common], help="doubling does not imply cubic")

    p = sub.add_parser("run", parents=[common], help="execute a JSON request file")
    p.add_argument("request", help="request file with a 'command' field")
    return parser


_NOT_PARAMS = {"format", "output", "timing", "request"}


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "run":
            path = Path(args.request)
            try:
                request = json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise ModelParseError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}")
            base_dir = path.parent
        else:
            request = {k: v for k, v in vars(args).items() if k not in _NOT_PARAMS}
            base_dir = None
        report = run(request, base_dir=base_dir, timing=args.timing)
        rep.emit_report(report, args.format, args.output, stdout)
    except DivergenceError as exc:
        print(f"multicubic: divergence: {exc}", file=stderr)
        return EXIT_FAIL
    except (MulticubicError, ValueError) as exc:
        print(f"multicubic: error: {exc}", file=stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"multicubic: I/O error: {exc}", file=stderr)
        return EXIT_USAGE
    return report.status


if __name__ == "__main__":
    sys.exit(main())
