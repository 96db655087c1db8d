"""Fixed-point stabilization of approximately multi-cubic mappings.

The rescaling operator T f(x) = 2^(-3n beta) f(2^beta x) contracts the
distance to multi-cubic mappings; its iterates converge to the unique
multi-cubic approximant C whenever the control function is summable along
the orbit x, 2^beta x, 4^beta x, ...
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import _numeric as num
from .equation import (
    MULTI_CUBIC,
    EquationSample,
    Tolerances,
    _as_sample,
    _diff,
    classify,
)
from .errors import DivergenceError, DomainError, SingularityError, UnsupportedExponentError
from .mappings import Mapping, PerturbedMapping, PolynomialModel

POWER = "power"
PRODUCT = "product"
EMPIRICAL = "empirical"

HYPOTHESIS_VIOLATED = "HypothesisViolated"
COUNTEREXAMPLE = "CounterexampleToTheorem"

DEFAULT_ITERATIONS = 40
DEFAULT_SERIES_TERMS = 60
DEFAULT_TOLERANCE = 1e-9


def _two_pow(e, mode):
    """2**e for integer e, exact in exact mode."""
    if mode == num.EXACT:
        return Fraction(2) ** e
    return math.ldexp(1.0, e)


def _mode_of(point):
    for c in point:
        c = c[0] if isinstance(c, tuple) else c
        return num.FLOAT if isinstance(c, float) else num.EXACT
    return num.EXACT


# -- control functions ----------------------------------------------------------

@dataclass(frozen=True)
class ControlFunction:
    """The non-negative bound phi(x1, x2) on ||D f(x1, x2)||.

    power:     delta * sum_{i,j} ||x_ij||^alpha
    product:   delta * prod_{i,j} ||x_ij||^p_ij   (p is 2 x n)
    empirical: a lookup table keyed by EquationSample, or a callable
    """

    kind: str
    delta: Fraction = Fraction(0)
    alpha: Fraction = None
    p: tuple = None
    table: object = None

    def __call__(self, x1, x2):
        if self.kind == POWER:
            total = 0
            for c in x1 + x2:
                total = total + num.pow_norm(num.coord_norm(c), self.alpha)
            return self.delta * total
        if self.kind == PRODUCT:
            total = 1
            for row, point in zip(self.p, (x1, x2)):
                for pij, c in zip(row, point):
                    total = total * num.pow_norm(num.coord_norm(c), pij)
            return self.delta * total
        if callable(self.table):
            return self.table(x1, x2)
        key = EquationSample(num.point_to_mode(x1, num.EXACT), num.point_to_mode(x2, num.EXACT))
        try:
            return self.table[key]
        except KeyError:
            raise DomainError(f"empirical control has no entry for {key}") from None

    @property
    def exponent_sum(self):
        return sum(sum(row) for row in self.p)


def power_control(delta, alpha):
    delta = Fraction(delta)
    if delta < 0:
        raise DomainError(f"delta must be non-negative, got {delta}")
    return ControlFunction(POWER, delta, alpha=Fraction(alpha))


def product_control(delta, p):
    """``p`` is a pair of rows (p_11..p_1n, p_21..p_2n) of positive exponents."""
    delta = Fraction(delta)
    if delta < 0:
        raise DomainError(f"delta must be non-negative, got {delta}")
    rows = tuple(tuple(Fraction(v) for v in row) for row in p)
    if len(rows) != 2 or len(rows[0]) != len(rows[1]):
        raise DomainError("product exponents must form a 2 x n matrix")
    if any(v <= 0 for row in rows for v in row):
        raise DomainError("product exponents must be positive")
    return ControlFunction(PRODUCT, delta, p=rows)


def empirical_control(table):
    return ControlFunction(EMPIRICAL, table=table)


# -- generic contraction engine ------------------------------------------------

@dataclass(frozen=True)
class OperatorDescriptor:
    """Lambda delta(x) = sum_i L_i(x) delta(g_i(x)); T acts by the same formula."""

    transforms: tuple  # of (g_i, L_i) pairs

    def __post_init__(self):
        if not self.transforms:
            raise DomainError("an operator needs at least one summand")


def rescaling_descriptor(n, beta, mode=num.EXACT):
    """The single-summand operator g(x) = 2^beta x, L = 2^(-3n beta)."""
    factor = _two_pow(beta, mode)
    weight = _two_pow(-3 * n * beta, mode)
    return OperatorDescriptor(((lambda x: num.scale_point(x, factor), lambda x: weight),))


@dataclass
class IterationResult:
    value: object
    theta_star: object
    converged: bool
    diverged: bool
    terms: list = field(default_factory=list, repr=False)


def _is_diverging(terms, window=5):
    if any(not num.is_finite(t) for t in terms):
        return True
    tail = terms[-(window + 1):]
    if len(tail) < 2 or tail[-1] == 0:
        return False
    if any(t == 0 for t in tail):
        return False
    log_ratio = sum(math.log(float(b) / float(a)) for a, b in zip(tail, tail[1:]))
    return log_ratio >= 0


def _combine(acc, w, value):
    if isinstance(value, tuple):
        if acc is None:
            return tuple(w * v for v in value)
        return tuple(a + w * v for a, v in zip(acc, value))
    return w * value if acc is None else acc + w * value


def iterate_operator(desc, phi0, theta, x, iterations, tol=DEFAULT_TOLERANCE):
    """Return T^L phi0(x) and sum_{l<=L} Lambda^l theta(x).

    The orbit is expanded exactly: with j summands the level-l frontier holds
    j^l weighted points.
    """
    frontier = [(1, tuple(x))]
    terms = []
    previous = value = None
    for level in range(iterations + 1):
        term = 0
        current = None
        for w, pt in frontier:
            term = term + w * theta(pt)
            current = _combine(current, w, phi0(pt))
        terms.append(term)
        previous, value = value, current
        if level < iterations:
            frontier = [
                (w * weight(pt), g(pt)) for w, pt in frontier for g, weight in desc.transforms
            ]
    if _is_diverging(terms):
        return IterationResult(None, None, False, True, terms)
    if previous is None:
        converged = True
    else:
        delta = (
            num.vec_norm(num.vec_sub(value, previous))
            if isinstance(value, tuple)
            else abs(value - previous)
        )
        converged = delta <= tol
    return IterationResult(value, sum(terms), converged, False, terms)


# -- the multi-cubic rescaling -------------------------------------------------

def choose_beta(alpha, n):
    """+1 below the critical exponent 3n, -1 above it."""
    alpha = Fraction(alpha) if not isinstance(alpha, float) else alpha
    if alpha == 3 * n:
        raise UnsupportedExponentError(f"alpha = 3n = {3 * n} is the excluded critical exponent")
    return 1 if alpha < 3 * n else -1


def _check_beta(beta):
    if beta not in (-1, 1):
        raise DomainError(f"beta must be -1 or +1, got {beta!r}")


def apply_T_pow(f, beta, l, x):
    """T^l f(x) = 2^(-3n beta l) f(2^(beta l) x)."""
    _check_beta(beta)
    if l < 0:
        raise DomainError(f"iteration count must be >= 0, got {l}")
    x = num.point_to_mode(x, f.mode)
    value = f(num.scale_point(x, _two_pow(beta * l, f.mode)))
    return num.vec_scale(value, _two_pow(-3 * f.n * beta * l, f.mode))


@dataclass(frozen=True)
class TPowMapping(Mapping):
    """The mapping T^l f as a first-class mapping."""

    base: Mapping
    beta: int
    l: int

    @property
    def n(self):
        return self.base.n

    @property
    def m(self):
        return self.base.m

    @property
    def mode(self):
        return self.base.mode

    def evaluate(self, point):
        value = self.base(num.scale_point(point, _two_pow(self.beta * self.l, self.mode)))
        return num.vec_scale(value, _two_pow(-3 * self.n * self.beta * self.l, self.mode))


def contraction_residual(f, x):
    """f(2x) - 2^(3n) f(x); bounded by 2^(-n) phi(x, 0) under the hypothesis."""
    x = num.point_to_mode(x, f.mode)
    return num.vec_sub(f(num.scale_point(x, 2)), num.vec_scale(f(x), 2 ** (3 * f.n)))


# -- the bound Phi ---------------------------------------------------------------

@dataclass
class SeriesResult:
    partial: object
    tail: object
    diverged: bool
    ratio: object = None

    @property
    def total(self):
        if self.diverged:
            return math.inf
        return self.partial + self.tail


def _geometric_ratio(phi, beta, n, mode):
    # phi(2^s x, 0) = 2^(s alpha) phi(x, 0) for power controls with alpha > 0
    if phi.kind != POWER or phi.alpha <= 0:
        return None
    exponent = beta * (phi.alpha - 3 * n)
    if isinstance(exponent, Fraction) and exponent.denominator == 1 and mode == num.EXACT:
        return Fraction(2) ** exponent.numerator
    return 2.0 ** float(exponent)


def phi_series(x, phi, beta, n, terms=DEFAULT_SERIES_TERMS, mode=None):
    """Truncated Phi(x) with ``terms`` + 1 summands, plus a tail estimate.

    Phi(x) = 2^-(3n(beta+1)/2 + n) sum_l 2^(-3n beta l) phi(2^(beta l + (beta-1)/2) x, 0)

    For power controls with alpha > 0 the summands are geometric and the tail
    is the exact remainder; otherwise it is extrapolated from the last ratio.
    """
    _check_beta(beta)
    mode = mode or _mode_of(x)
    x = num.point_to_mode(x, mode)
    zero = num.zero_like(x)
    prefactor = _two_pow(-(3 * n * (beta + 1) // 2 + n), mode)
    offset = (beta - 1) // 2
    summands = []
    for l in range(terms + 1):
        scaled = num.scale_point(x, _two_pow(beta * l + offset, mode))
        summands.append(prefactor * _two_pow(-3 * n * beta * l, mode) * phi(scaled, zero))
    partial = sum(summands, num.to_mode(0, mode))
    ratio = _geometric_ratio(phi, beta, n, mode)
    if ratio is None and len(summands) >= 2 and summands[-2] != 0:
        ratio = summands[-1] / summands[-2]
    last = summands[-1]
    if not num.is_finite(partial):
        return SeriesResult(partial, math.inf, True, ratio)
    if last == 0:
        return SeriesResult(partial, last, False, ratio)
    if ratio is None or ratio >= 1 or _is_diverging(summands):
        return SeriesResult(partial, math.inf, True, ratio)
    return SeriesResult(partial, last * ratio / (1 - ratio), False, ratio)


def _closed_form_constant(delta, alpha, n, variant):
    if variant not in ("paper", "series"):
        raise DomainError(f"variant must be 'paper' or 'series', got {variant!r}")
    alpha = Fraction(alpha) if not isinstance(alpha, float) else alpha
    if alpha == 3 * n:
        raise UnsupportedExponentError(f"alpha = 3n = {3 * n} is the excluded critical exponent")
    exact = isinstance(alpha, Fraction) and alpha.denominator == 1
    two_alpha = Fraction(2) ** int(alpha) if exact else 2.0 ** float(alpha)
    big = Fraction(2) ** (4 * n)
    mixed = two_alpha * 2 ** n
    delta = Fraction(delta) if exact else float(delta)
    if alpha < 3 * n:
        return delta / (big - mixed)
    if variant == "paper":
        return two_alpha * delta / (mixed - big)
    return delta / (mixed - big)


def phi_closed_form(x, delta, alpha, n, variant="paper"):
    """Closed-form bound for power controls: constant * sum_j ||x_j||^alpha.

    Below 3n both variants give delta / (2^(4n) - 2^(alpha+n)).  Above 3n the
    ``paper`` variant carries an extra factor 2^alpha relative to the exact
    geometric sum returned by ``series``.
    """
    const = _closed_form_constant(delta, alpha, n, variant)
    alpha = Fraction(alpha) if not isinstance(alpha, float) else alpha
    if isinstance(const, float):
        x = num.point_to_mode(x, num.FLOAT)
    total = 0
    for c in x:
        total = total + num.pow_norm(num.coord_norm(c), alpha)
    return const * total


# -- hypothesis checks ---------------------------------------------------------

def _exceeds(norm, bound, scale, mode, atol):
    if mode == num.EXACT:
        return norm > bound
    return norm > bound + atol * max(1.0, scale)


@dataclass
class HypothesisCheck:
    certified: bool
    samples: int
    violations: int = 0
    first_violation: EquationSample = None


def check_hypothesis(f, phi, grid, atol=1e-9):
    """||D f(x1, x2)|| <= phi(x1, x2) on every sample of ``grid``."""
    result = HypothesisCheck(True, 0)
    for s in grid:
        s = _as_sample(s, f)
        value, scale = _diff(f, s)
        result.samples += 1
        if _exceeds(num.vec_norm(value), phi(s.x1, s.x2), scale, f.mode, atol):
            result.violations += 1
            if result.first_violation is None:
                result.first_violation = s
    result.certified = result.violations == 0
    return result


def fit_delta(f, alpha, grid):
    """Smallest delta with ||D f|| <= delta * sum_{i,j} ||x_ij||^alpha on ``grid``.

    Samples where both sides vanish are skipped; a nonzero residual over a
    vanishing sum makes delta infinite (not admissible).
    """
    alpha = Fraction(alpha)
    best = num.to_mode(0, f.mode)
    for s in grid:
        s = _as_sample(s, f)
        norm = num.vec_norm(_diff(f, s)[0])
        weight = 0
        for c in s.x1 + s.x2:
            weight = weight + num.pow_norm(num.coord_norm(c), alpha)
        if weight == 0:
            if norm == 0:
                continue
            return math.inf
        best = max(best, norm / weight)
    return best


# -- stabilization --------------------------------------------------------------

@dataclass(frozen=True)
class StabilizationConfig:
    beta: int = None
    iterations: int = DEFAULT_ITERATIONS
    mode: str = None
    tolerance: float = DEFAULT_TOLERANCE
    points: tuple = ()
    grid: tuple = None
    series_terms: int = DEFAULT_SERIES_TERMS

    def __post_init__(self):
        if self.iterations < 1:
            raise DomainError(f"iterations must be >= 1, got {self.iterations}")
        if self.tolerance <= 0:
            raise DomainError(f"tolerance must be positive, got {self.tolerance}")
        if self.beta is not None:
            _check_beta(self.beta)
        if self.mode is not None:
            num.check_mode(self.mode)


@dataclass
class StabilizationRow:
    x: tuple
    f: tuple = None
    C: tuple = None
    phi_series: object = None
    phi_paper: object = None
    error: object = None
    bound_ok: bool = None
    converged: bool = None
    trace: list = field(default_factory=list, repr=False)
    note: str = None


@dataclass
class StabilizationReport:
    beta: int
    iterations: int
    mode: str
    rows: list
    hypothesis: HypothesisCheck = None
    recovered_coefficient: tuple = None
    pathway: str = "fixed-point"
    saturated: bool = False
    hyperstability: object = None

    @property
    def bound_satisfied(self):
        return all(r.bound_ok for r in self.rows)

    @property
    def converged(self):
        return all(r.converged for r in self.rows)

    @property
    def singular_points(self):
        return [r.x for r in self.rows if r.note == "singular"]


def _is_polynomial(f):
    while isinstance(f, PerturbedMapping):
        f = f.base
    return isinstance(f, PolynomialModel)


def _iterate_point(f, beta, iterations, x):
    values = []
    for l in range(iterations + 1):
        value = f(num.scale_point(x, _two_pow(beta * l, f.mode)))
        values.append(num.vec_scale(value, _two_pow(-3 * f.n * beta * l, f.mode)))
    return values


def stabilize(f, phi, cfg):
    """Approximate the multi-cubic C = lim T^l f at cfg.points and certify ||f - C|| <= Phi.

    Product-type controls vanish on (x, 0), so Phi is identically zero; they
    go through the hyperstability check instead of the bound computation.
    """
    mode = cfg.mode or f.mode
    f = f.with_mode(mode)
    n = f.n
    points = [num.point_to_mode(x, mode) for x in cfg.points]

    if phi.kind == PRODUCT:
        verdict = hyperstability_check(f, phi, cfg.grid or ())
        zero = num.to_mode(0, mode)
        rows = []
        for x in points:
            value = f(x)
            rows.append(StabilizationRow(x, value, value, zero, zero, zero, verdict.ok, True))
        return StabilizationReport(cfg.beta or 1, 0, mode, rows, pathway="hyperstability",
                                   hyperstability=verdict)

    if cfg.beta is not None:
        beta = cfg.beta
    elif phi.kind == POWER:
        beta = choose_beta(phi.alpha, n)
    else:
        raise DomainError("beta must be given explicitly for empirical controls")

    hypothesis = check_hypothesis(f, phi, cfg.grid, cfg.tolerance) if cfg.grid else None
    report = StabilizationReport(beta, cfg.iterations, mode, [], hypothesis)

    for x in points:
        row = StabilizationRow(x)
        try:
            series = phi_series(x, phi, beta, n, cfg.series_terms, mode)
        except SingularityError:
            row.note = "singular"
            row.bound_ok = False
            report.rows.append(row)
            continue
        if series.diverged:
            raise DivergenceError(
                f"Phi({_fmt_point(x)}) diverges for beta={beta}: the control is not "
                "summable along the orbit, so the bound hypothesis Phi(x) < inf fails"
            )
        values = _iterate_point(f, beta, cfg.iterations, x)
        if any(not num.is_finite(v) for value in values for v in value):
            report.saturated = True
            row.note = "saturated"
        row.f, row.C = values[0], values[-1]
        row.trace = [num.vec_norm(num.vec_sub(b, a)) for a, b in zip(values, values[1:])]
        row.converged = bool(row.trace) and row.trace[-1] <= cfg.tolerance
        row.phi_series = series.total
        if phi.kind == POWER:
            try:
                row.phi_paper = phi_closed_form(x, phi.delta, phi.alpha, n, "paper")
            except SingularityError:
                row.phi_paper = None
        row.error = num.vec_norm(num.vec_sub(row.f, row.C))
        row.bound_ok = row.note is None and row.error <= row.phi_series
        report.rows.append(row)

    if _is_polynomial(f):
        ones = tuple(num.to_mode(1, mode) for _ in range(n))
        report.recovered_coefficient = _iterate_point(f, beta, cfg.iterations, ones)[-1]
    return report


def _fmt_point(x):
    return "(" + ", ".join(num.format_scalar(c) if not isinstance(c, tuple) else str(c)
                           for c in x) + ")"


# -- decay of D(T^l f) -------------------------------------------------------------

@dataclass
class DecayReport:
    holds: bool
    hypothesis_ok: bool
    worst_ratio: object
    checked: int
    violations: list = field(default_factory=list)
    hypothesis_failures: list = field(default_factory=list)


def dpow_decay_check(f, phi, beta, grid, l_max, rtol=None):
    """Check ||D(T^l f)(x1, x2)|| <= 2^(-3n beta l) phi(2^(beta l) x1, 2^(beta l) x2).

    The left side is evaluated through T^l f itself.  Samples where the
    hypothesis fails at the rescaled pair are reported as hypothesis failures,
    not as violations.
    """
    _check_beta(beta)
    if rtol is None:
        rtol = 0 if f.mode == num.EXACT else 1e-12
    grid = [_as_sample(s, f) for s in grid]
    report = DecayReport(True, True, num.to_mode(0, f.mode), 0)
    for l in range(l_max + 1):
        tl = TPowMapping(f, beta, l)
        factor = _two_pow(beta * l, f.mode)
        weight = _two_pow(-3 * f.n * beta * l, f.mode)
        for s in grid:
            scaled = s.scaled(factor)
            bound = phi(scaled.x1, scaled.x2)
            base_norm = num.vec_norm(_diff(f, scaled)[0])
            lhs = num.vec_norm(_diff(tl, s)[0])
            rhs = weight * bound
            report.checked += 1
            if base_norm > bound * (1 + rtol):
                report.hypothesis_failures.append((l, s))
                continue
            if lhs > rhs * (1 + rtol):
                report.violations.append((l, s))
            if rhs > 0:
                report.worst_ratio = max(report.worst_ratio, lhs / rhs)
    report.holds = not report.violations
    report.hypothesis_ok = not report.hypothesis_failures
    return report


# -- hyperstability and uniqueness -----------------------------------------------

@dataclass
class HyperstabilityVerdict:
    kind: str
    sample: EquationSample = None
    residual: object = None
    bound: object = None
    classification: object = None

    @property
    def ok(self):
        return self.kind == MULTI_CUBIC

    @property
    def counterexample(self):
        return self.kind == COUNTEREXAMPLE


def hyperstability_check(f, phi, grid, tolerances=None):
    """Product-controlled approximate solutions must be exact multi-cubic solutions.

    Reports the worst violation of ||D f|| <= phi (by ratio, infinite where phi
    vanishes; first in grid order on ties).  If none, the grid classifier must
    accept f; anything else is flagged as a counterexample to the theorem.
    """
    if phi.kind != PRODUCT:
        raise DomainError("hyperstability needs a product-type control function")
    tol = tolerances or Tolerances()
    if phi.exponent_sum == 3 * f.n:
        raise UnsupportedExponentError(
            f"sum of exponents equals 3n = {3 * f.n}, the excluded critical case"
        )
    grid = [_as_sample(s, f) for s in grid]
    worst = None
    for s in grid:
        value, scale = _diff(f, s)
        norm = num.vec_norm(value)
        bound = phi(s.x1, s.x2)
        if not _exceeds(norm, bound, scale, f.mode, tol.equation):
            continue
        ratio = math.inf if bound == 0 else norm / bound
        if worst is None or ratio > worst[0]:
            worst = (ratio, s, value, bound)
    if worst is not None:
        return HyperstabilityVerdict(HYPOTHESIS_VIOLATED, worst[1], worst[2], worst[3])
    if not grid:
        raise DomainError("hyperstability grid is empty")
    verdict = classify(f, grid, tol)
    kind = MULTI_CUBIC if verdict.ok else COUNTEREXAMPLE
    return HyperstabilityVerdict(kind, verdict.sample, verdict.residual, classification=verdict)


@dataclass
class UniquenessReport:
    max_disagreement: object
    worst_point: tuple
    first: StabilizationReport
    second: StabilizationReport


def uniqueness_check(f1, f2, phi, cfg, points=None):
    """Stabilize both mappings and return the largest ||C1(x) - C2(x)|| over ``points``."""
    if points is not None:
        cfg = StabilizationConfig(
            cfg.beta, cfg.iterations, cfg.mode, cfg.tolerance, tuple(points), cfg.grid,
            cfg.series_terms,
        )
    r1 = stabilize(f1, phi, cfg)
    r2 = stabilize(f2, phi, cfg)
    worst, where = None, None
    for a, b in zip(r1.rows, r2.rows):
        if a.C is None or b.C is None:
            continue
        gap = num.vec_norm(num.vec_sub(a.C, b.C))
        if worst is None or gap > worst:
            worst, where = gap, a.x
    return UniquenessReport(worst if worst is not None else 0, where, r1, r2)
