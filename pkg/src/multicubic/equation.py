"""Both sides of the multi-cubic equation, its difference operator, and checks built on it.

For x1, x2 in V^n the equation reads

    sum_{q in {-1,1}^n} f(2 x1 + q x2) = sum_{k=0}^{n} 2^(n-k) 12^k f(M_k^n)

and the difference operator D f(x1, x2) is left side minus right side.
All grid checks certify at grid level only; verdict names say so.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from . import _numeric as num
from .combinatorics import NodeChoice, enumerate_Mk, enumerate_sign_patterns, rhs_weight
from .errors import DomainError
from .mappings import make_norm_cube

MULTI_CUBIC = "MultiCubicOnGrid"
EQUATION_FAILS = "EquationFails"
POWER_FAILS = "PowerConditionFails"
JUNKIM_FAILS = "JunKimFails"

DEFAULT_LO, DEFAULT_HI = -3, 3
DEFAULT_RANDOM_COUNT = 200
DEFAULT_MAX_ENTRY = 17


@dataclass(frozen=True)
class EquationSample:
    x1: tuple
    x2: tuple

    def __post_init__(self):
        object.__setattr__(self, "x1", tuple(self.x1))
        object.__setattr__(self, "x2", tuple(self.x2))
        if len(self.x1) != len(self.x2):
            raise DomainError(
                f"sample points have different arity: {len(self.x1)} vs {len(self.x2)}"
            )

    @property
    def n(self):
        return len(self.x1)

    def to_mode(self, mode):
        return EquationSample(num.point_to_mode(self.x1, mode), num.point_to_mode(self.x2, mode))

    def scaled(self, factor):
        return EquationSample(num.scale_point(self.x1, factor), num.scale_point(self.x2, factor))


def _as_sample(s, f):
    if not isinstance(s, EquationSample):
        s = EquationSample(*s)
    if s.n != f.n:
        raise DomainError(f"sample has arity {s.n}, mapping expects {f.n}")
    return s.to_mode(f.mode)


# -- the two sides ------------------------------------------------------------

def _nodes(s):
    # per coordinate: (x1j + x2j, x1j - x2j, x1j, 2x1j + x2j, 2x1j - x2j)
    out = []
    for a, b in zip(s.x1, s.x2):
        if isinstance(a, tuple):
            out.append((num.lin(a, 1, b, 1), num.lin(a, 1, b, -1), a,
                        num.lin(a, 2, b, 1), num.lin(a, 2, b, -1)))
        else:
            plus, minus = a + b, a - b
            out.append((plus, minus, a, plus + a, minus + a))
    return out


_NODE_INDEX = {NodeChoice.PLUS_DIFF: 0, NodeChoice.MINUS_DIFF: 1, NodeChoice.FIRST: 2}


@lru_cache(maxsize=None)
def _lhs_plan(n):
    return tuple((1, tuple(3 if sign > 0 else 4 for sign in q.signs))
                 for q in enumerate_sign_patterns(n))


@lru_cache(maxsize=None)
def _rhs_plan(n):
    return tuple(
        (rhs_weight(n, k), tuple(_NODE_INDEX[c] for c in term.choices))
        for k in range(n + 1)
        for term in enumerate_Mk(n, k)
    )


def _side(f, nodes, plan):
    """(sum of w * f(node point), largest |w * f| seen) over one side's plan."""
    pairs = [(w, tuple(nd[i] for nd, i in zip(nodes, idx))) for w, idx in plan]
    if f.mode == num.EXACT:
        return f.weighted_sum(pairs), 0
    total = [0] * f.m
    scale = 0
    for w, point in pairs:
        for i, v in enumerate(f(point)):
            total[i] += w * v
            scale = max(scale, abs(w * v))
    return tuple(total), scale


def _lhs(f, nodes):
    return _side(f, nodes, _lhs_plan(f.n))


def _rhs(f, nodes):
    return _side(f, nodes, _rhs_plan(f.n))


def lhs_sum(f, s):
    """sum over sign patterns q of f(2 x1 + q x2)."""
    return _lhs(f, _nodes(_as_sample(s, f)))[0]


def rhs_sum(f, s):
    """sum_k 2^(n-k) 12^k sum_{N in M_k^n} f(N)."""
    return _rhs(f, _nodes(_as_sample(s, f)))[0]


def _diff(f, s):
    nodes = _nodes(s)
    left, ls = _lhs(f, nodes)
    right, rs = _rhs(f, nodes)
    return num.vec_sub(left, right), max(ls, rs)


def diff_operator(f, s):
    """D f(x1, x2), exact in exact mode."""
    return _diff(f, _as_sample(s, f))[0]


# -- per-variable checks -------------------------------------------------------

def _check_index(f, j):
    if not isinstance(j, int) or not 1 <= j <= f.n:
        raise DomainError(f"variable index must be in 1..{f.n}, got {j!r}")


def _replace(point, j, value):
    return point[: j - 1] + (value,) + point[j:]


def _junkim(f, j, base, y):
    xj = base[j - 1]
    plus, minus = num.lin(xj, 1, y, 1), num.lin(xj, 1, y, -1)
    pairs = [
        (1, _replace(base, j, num.lin(plus, 1, xj, 1))),
        (1, _replace(base, j, num.lin(minus, 1, xj, 1))),
        (-2, _replace(base, j, plus)),
        (-2, _replace(base, j, minus)),
        (-12, base),
    ]
    if f.mode == num.EXACT:
        if len(base) != f.n:
            raise DomainError(f"point has arity {len(base)}, mapping expects {f.n}")
        return f.weighted_sum(pairs), 0
    out = [0] * f.m
    scale = 0
    for w, point in pairs:
        for i, v in enumerate(f(point)):
            out[i] += w * v
            scale = max(scale, abs(w * v))
    return tuple(out), scale


def junkim_residual(f, j, base, y):
    """Jun-Kim cubic residual of f in variable j (1-based) around ``base``.

    f(.., 2x_j + y, ..) + f(.., 2x_j - y, ..) - 2 f(.., x_j + y, ..)
    - 2 f(.., x_j - y, ..) - 12 f(.., x_j, ..)
    """
    _check_index(f, j)
    if len(base) != f.n:
        raise DomainError(f"base has arity {len(base)}, mapping expects {f.n}")
    base = num.point_to_mode(base, f.mode)
    y = num.coord_to_mode(y, f.mode)
    return _junkim(f, j, base, y)[0]


@dataclass(frozen=True)
class PowerCheck:
    holds: bool
    worst_deviation: object
    worst_relative: object
    worst_point: tuple = None
    doubled_value: tuple = None
    scaled_value: tuple = None


def check_power_condition(f, j, r, grid, rtol=1e-9):
    """Does f(.., 2 z_j, ..) == 2^r f(z) hold at every point of ``grid``?

    Exact mode demands equality; float mode allows relative deviation ``rtol``.
    """
    _check_index(f, j)
    factor = 2 ** r if r >= 0 else Fraction(1, 2 ** (-r))
    if f.mode == num.FLOAT:
        factor = float(factor)
    holds = True
    worst = None
    for z in grid:
        z = num.point_to_mode(z, f.mode)
        doubled = f(_replace(z, j, num.scale_coord(z[j - 1], 2)))
        scaled = num.vec_scale(f(z), factor)
        dev = num.vec_norm(num.vec_sub(doubled, scaled))
        size = max(num.vec_norm(doubled), num.vec_norm(scaled))
        rel = dev / size if size else dev * 0
        if f.mode == num.EXACT:
            ok = dev == 0
        else:
            ok = dev <= rtol * size
        holds = holds and ok
        if worst is None or dev > worst.worst_deviation:
            worst = PowerCheck(ok, dev, rel, z, doubled, scaled)
    if worst is None:
        return PowerCheck(True, 0, 0)
    return PowerCheck(holds, worst.worst_deviation, worst.worst_relative,
                      worst.worst_point, worst.doubled_value, worst.scaled_value)


# -- grids ---------------------------------------------------------------------

def _coord_values(lo, hi, dim):
    values = [Fraction(v) for v in range(lo, hi + 1)]
    if dim == 1:
        return values
    return [tuple(c) for c in itertools.product(values, repeat=dim)]


def integer_grid(n, lo=DEFAULT_LO, hi=DEFAULT_HI, dim=1):
    """Cross grid: x1 and x2 both range over {lo..hi}^n, x1 varying slowest."""
    coords = _coord_values(lo, hi, dim)
    points = list(itertools.product(coords, repeat=n))
    return [EquationSample(a, b) for a in points for b in points]


def _random_rational(rng, max_entry):
    return Fraction(rng.randint(-max_entry, max_entry), rng.randint(1, max_entry))


def random_grid(n, count=DEFAULT_RANDOM_COUNT, seed=0, max_entry=DEFAULT_MAX_ENTRY, dim=1):
    """``count`` seeded random rational pairs with |numerator|, denominator <= max_entry."""
    rng = random.Random(seed)

    def point():
        if dim == 1:
            return tuple(_random_rational(rng, max_entry) for _ in range(n))
        return tuple(
            tuple(_random_rational(rng, max_entry) for _ in range(dim)) for _ in range(n)
        )

    samples = []
    for _ in range(count):
        a = point()
        samples.append(EquationSample(a, point()))
    return samples


def default_grid(n, dim=1, seed=0):
    """Integer cross grid {-3..3}^n for both points followed by 200 random pairs."""
    return integer_grid(n, dim=dim) + random_grid(n, seed=seed, dim=dim)


def grid_points(grid):
    """Distinct points appearing as x1 or x2 in ``grid``, in first-seen order."""
    seen = {}
    for s in grid:
        seen.setdefault(s.x1, None)
        seen.setdefault(s.x2, None)
    return list(seen)


# -- residual reports and the classifier --------------------------------------

@dataclass
class ResidualReport:
    samples: int
    max_residual: object
    worst_sample: EquationSample = None
    worst_residual: tuple = None
    per_sample: list = field(default=None, repr=False)


def residual_report(f, grid, keep_samples=False):
    """Maximum of ||D f|| over ``grid``; ties go to the first sample in grid order."""
    report = ResidualReport(samples=0, max_residual=num.to_mode(0, f.mode))
    if keep_samples:
        report.per_sample = []
    for s in grid:
        s = _as_sample(s, f)
        value = _diff(f, s)[0]
        norm = num.vec_norm(value)
        report.samples += 1
        if report.worst_sample is None or norm > report.max_residual:
            report.max_residual = norm
            report.worst_sample = s
            report.worst_residual = value
        if keep_samples:
            report.per_sample.append((s, value))
    return report


@dataclass(frozen=True)
class Tolerances:
    """Float-mode tolerances; exact mode ignores them and demands equality."""

    equation: float = 1e-9
    power: float = 1e-9
    junkim: float = 1e-9


@dataclass
class Verdict:
    kind: str
    samples_checked: int = 0
    sample: EquationSample = None
    variable: int = None
    point: tuple = None
    residual: tuple = None

    @property
    def ok(self):
        return self.kind == MULTI_CUBIC


def _vanishes(value, scale, mode, atol):
    norm = num.vec_norm(value)
    if mode == num.EXACT:
        return norm == 0
    return norm <= atol * max(1.0, scale)


def classify(f, grid, tolerances=None):
    """Grid-level version of: equation + 3-power condition in each variable => multi-cubic.

    Checks run in order equation, power condition, per-variable Jun-Kim; the
    first failure found in grid order decides the verdict.  A JunKimFails
    verdict would contradict the theorem and is reported as such.
    """
    tol = tolerances or Tolerances()
    grid = [_as_sample(s, f) for s in grid]
    if not grid:
        raise DomainError("classification grid is empty")
    for s in grid:
        value, scale = _diff(f, s)
        if not _vanishes(value, scale, f.mode, tol.equation):
            return Verdict(EQUATION_FAILS, len(grid), sample=s, residual=value)
    points = grid_points(grid)
    for j in range(1, f.n + 1):
        check = check_power_condition(f, j, 3, points, rtol=tol.power)
        if not check.holds:
            return Verdict(POWER_FAILS, len(grid), variable=j, point=check.worst_point,
                           residual=num.vec_sub(check.doubled_value, check.scaled_value))
    for s in grid:
        for j in range(1, f.n + 1):
            value, scale = _junkim(f, j, s.x1, s.x2[j - 1])
            if not _vanishes(value, scale, f.mode, tol.junkim):
                return Verdict(JUNKIM_FAILS, len(grid), sample=s, variable=j, residual=value)
    return Verdict(MULTI_CUBIC, len(grid))


# -- the doubling-is-not-enough demonstrator ----------------------------------

@dataclass
class Remark21Demo:
    power_condition: PowerCheck
    grid_size: int
    residual_at_zero: tuple
    residual_at_origin_pair: tuple
    doubled_value: tuple
    base_value: tuple
    verdict: Verdict

    @property
    def confirmed(self):
        return (
            self.power_condition.holds
            and num.vec_norm(self.residual_at_zero) > 0
            and self.verdict.kind == EQUATION_FAILS
        )


def remark21_demo():
    """h(a) = ||a||^3 (1, 0) on R^2 doubles by 8 but is not cubic."""
    h = make_norm_cube(2, (1, 0), "euclidean", num.FLOAT)
    points = [(c,) for c in _coord_values(DEFAULT_LO, DEFAULT_HI, 2)]
    power = check_power_condition(h, 1, 3, points, rtol=1e-12)
    zero = ((0.0, 0.0),)
    residual = junkim_residual(h, 1, zero, (1.0, 0.0))
    residual00 = junkim_residual(h, 1, zero, (0.0, 0.0))
    doubled = h(((6.0, 8.0),))
    base = h(((3.0, 4.0),))
    # x1 = 0 samples come first so the failure lands on one of them
    zeros = [EquationSample(zero, (c,)) for c in _coord_values(DEFAULT_LO, DEFAULT_HI, 2)]
    verdict = classify(h, zeros + default_grid(1, dim=2))
    return Remark21Demo(power, len(points), residual, residual00, doubled, base, verdict)
