"""Evaluable mappings f: V^n -> W.

Every mapping exposes ``n`` (number of variables), ``m`` (codomain dimension),
``mode`` (``"exact"`` or ``"float"``) and is called with a point, i.e. a tuple
of n coordinates, returning a tuple of m scalars.  Calling a mapping directly
skips mode coercion; :func:`eval` coerces and validates first.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from . import _numeric as num
from .errors import DomainError, ModelParseError

DEFAULT_MAX_DEGREE = 6


class Mapping:
    coord_dim = 1

    def evaluate(self, point):
        raise NotImplementedError

    def __call__(self, point):
        if len(point) != self.n:
            raise DomainError(f"point has arity {len(point)}, mapping expects {self.n}")
        return self.evaluate(point)

    def with_mode(self, mode):
        raise NotImplementedError

    def weighted_sum(self, pairs):
        """sum of w * f(point) over (w, point) pairs."""
        out = [0] * self.m
        for w, point in pairs:
            for i, v in enumerate(self.evaluate(point)):
                out[i] += w * v
        return tuple(out)


def eval(model, x):  # noqa: A001 - mirrors the operation name
    """Evaluate ``model`` at ``x`` after coercing coordinates to the model's mode."""
    if len(x) != model.n:
        raise DomainError(f"point has arity {len(x)}, mapping expects {model.n}")
    return model(num.point_to_mode(x, model.mode))


@dataclass(frozen=True)
class PolynomialModel(Mapping):
    """Sum of monomials c * prod_j x_j^d_j with vector coefficients c in Q^m."""

    n: int
    m: int
    terms: tuple
    mode: str = num.EXACT
    max_degree: int = DEFAULT_MAX_DEGREE
    _float_terms: tuple = field(default=(), init=False, repr=False, compare=False)
    _col_degree: tuple = field(default=(), init=False, repr=False, compare=False)
    _int_terms: tuple = field(default=(), init=False, repr=False, compare=False)
    _common_den: int = field(default=1, init=False, repr=False, compare=False)

    def __post_init__(self):
        num.check_mode(self.mode)
        if self.n < 1 or self.m < 1:
            raise DomainError(f"need n >= 1 and m >= 1, got n={self.n}, m={self.m}")
        merged = {}
        for degrees, coeff in self.terms:
            degrees = tuple(int(d) for d in degrees)
            if len(degrees) != self.n:
                raise DomainError(f"degrees {degrees} do not have length n={self.n}")
            if any(d < 0 or d > self.max_degree for d in degrees):
                raise DomainError(
                    f"degrees {degrees} outside 0..{self.max_degree}"
                )
            if not isinstance(coeff, (tuple, list)):
                coeff = (coeff,)
            coeff = tuple(Fraction(c) for c in coeff)
            if len(coeff) != self.m:
                raise DomainError(f"coefficient {coeff} does not have length m={self.m}")
            prev = merged.get(degrees, (Fraction(0),) * self.m)
            merged[degrees] = num.vec_add(prev, coeff)
        terms = tuple(
            (d, c) for d, c in sorted(merged.items()) if any(v != 0 for v in c)
        )
        object.__setattr__(self, "terms", terms)
        object.__setattr__(
            self,
            "_float_terms",
            tuple((d, tuple(float(v) for v in c)) for d, c in terms),
        )
        col = [0] * self.n
        for d, _ in terms:
            for j, dj in enumerate(d):
                col[j] = max(col[j], dj)
        object.__setattr__(self, "_col_degree", tuple(col))
        # exact evaluation runs on integers over one common denominator
        common = 1
        for _, c in terms:
            for v in c:
                common = common * v.denominator // math.gcd(common, v.denominator)
        object.__setattr__(self, "_common_den", common)
        object.__setattr__(
            self,
            "_int_terms",
            tuple((d, tuple(int(v * common) for v in c)) for d, c in terms),
        )

    def _evaluate_exact(self, point):
        dens = 1
        tables = []
        for c, top in zip(point, self._col_degree):
            p, q = c.numerator, c.denominator
            pp, qq = [1], [1]
            for _ in range(top):
                pp.append(pp[-1] * p)
                qq.append(qq[-1] * q)
            tables.append((pp, qq, top))
            dens *= qq[top]
        out = [0] * self.m
        for degrees, coeff in self._int_terms:
            mono = 1
            for (pp, qq, top), d in zip(tables, degrees):
                mono *= pp[d] * qq[top - d]
            for i, c in enumerate(coeff):
                out[i] += c * mono
        den = dens * self._common_den
        return tuple(Fraction(v, den) for v in out)

    def weighted_sum(self, pairs):
        if self.mode != num.EXACT:
            return super().weighted_sum(pairs)
        pairs = list(pairs)
        # per variable: a denominator shared by every value in the batch
        shared = []
        for j, top in enumerate(self._col_degree):
            den = 1
            for _, point in pairs:
                q = point[j].denominator
                den = den * q // math.gcd(den, q)
            dpow = [1]
            for _ in range(top):
                dpow.append(dpow[-1] * den)
            shared.append((den, dpow, top, {}))
        out = [0] * self.m
        for w, point in pairs:
            tables = []
            for c, (den, dpow, top, cache) in zip(point, shared):
                # node values are shared objects within a batch; identity is a cheap key
                row = cache.get(id(c))
                if row is None:
                    p = c.numerator * (den // c.denominator)
                    pp = [1]
                    for _ in range(top):
                        pp.append(pp[-1] * p)
                    row = cache[id(c)] = [pp[d] * dpow[top - d] for d in range(top + 1)]
                tables.append(row)
            for degrees, coeff in self._int_terms:
                mono = w
                for row, d in zip(tables, degrees):
                    mono *= row[d]
                for i, c in enumerate(coeff):
                    out[i] += c * mono
        den = self._common_den
        for _, dpow, top, _ in shared:
            den *= dpow[top]
        return tuple(Fraction(v, den) for v in out)

    def evaluate(self, point):
        if self.mode == num.EXACT:
            return self._evaluate_exact(point)
        terms, out = self._float_terms, [0.0] * self.m
        powers = []
        for c, top in zip(point, self._col_degree):
            p = [1, c]
            for _ in range(2, top + 1):
                p.append(p[-1] * c)
            powers.append(p)
        for degrees, coeff in terms:
            mono = 1
            for pj, d in zip(powers, degrees):
                if d:
                    mono = mono * pj[d]
            for i, c in enumerate(coeff):
                out[i] += c * mono
        return tuple(out)

    def with_mode(self, mode):
        return replace(self, mode=num.check_mode(mode))

    def has_non_cubic_term(self):
        return any(any(d != 3 for d in degrees) for degrees, _ in self.terms)


def make_multicubic_monomial(n, c, mode=num.EXACT):
    """The model x -> c * prod_j x_j^3; ``c`` is a scalar or a vector in Q^m."""
    coeff = tuple(c) if isinstance(c, (tuple, list)) else (c,)
    return PolynomialModel(n, len(coeff), (((3,) * n, coeff),), mode=mode)


def zero_model(n, m=1, mode=num.EXACT):
    return PolynomialModel(n, m, (), mode=mode)


def _point_key(point):
    parts = []
    for c in point:
        if isinstance(c, tuple):
            parts.append("(" + ",".join(str(Fraction(u)) for u in c) + ")")
        else:
            parts.append(str(Fraction(c)))
    return ";".join(parts)


def unit_noise(point, component, seed, mode):
    """Deterministic pseudorandom value in [-1, 1] keyed on (seed, component, point).

    The key is the exact rational value of each coordinate, so a dyadic point
    gets the same value in both modes; 2x and x hash independently.
    """
    key = f"{seed}|{component}|{_point_key(point)}".encode()
    h = int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")
    top = 2 ** 64 - 1
    if mode == num.EXACT:
        return Fraction(2 * h, top) - 1
    return 2.0 * h / top - 1.0


@dataclass(frozen=True)
class PowerNoise:
    delta: Fraction
    alpha: Fraction
    seed: int = 0
    kind = "power"

    def magnitude(self, point):
        total = 0
        for c in point:
            total = total + num.pow_norm(num.coord_norm(c), self.alpha)
        return self.delta * total


@dataclass(frozen=True)
class ProductNoise:
    """delta * u(x) * prod_j ||x_j||^p_j (one exponent per variable)."""

    delta: Fraction
    exponents: tuple
    seed: int = 0
    kind = "product"

    def magnitude(self, point):
        total = 1
        for c, p in zip(point, self.exponents):
            total = total * num.pow_norm(num.coord_norm(c), p)
        return self.delta * total


@dataclass(frozen=True)
class PerturbedMapping(Mapping):
    base: Mapping
    noise: object = None

    @property
    def n(self):
        return self.base.n

    @property
    def m(self):
        return self.base.m

    @property
    def mode(self):
        return self.base.mode

    @property
    def coord_dim(self):
        return self.base.coord_dim

    def evaluate(self, point):
        value = self.base.evaluate(point)
        if self.noise is None or self.noise.delta == 0:
            return value
        mag = self.noise.magnitude(point)
        if self.mode == num.FLOAT:
            mag = float(mag)
        if mag == 0:
            return value
        return tuple(
            v + mag * unit_noise(point, i, self.noise.seed, self.mode)
            for i, v in enumerate(value)
        )

    def with_mode(self, mode):
        return replace(self, base=self.base.with_mode(mode))


def add_power_noise(base, delta, alpha, seed=0):
    """base + delta * u(x) * sum_j ||x_j||^alpha with u seeded, |u| <= 1."""
    delta = Fraction(delta)
    if delta < 0:
        raise DomainError(f"delta must be non-negative, got {delta}")
    return PerturbedMapping(base, PowerNoise(delta, Fraction(alpha), int(seed)))


def add_product_noise(base, delta, exponents, seed=0):
    delta = Fraction(delta)
    if delta < 0:
        raise DomainError(f"delta must be non-negative, got {delta}")
    exps = tuple(Fraction(p) for p in exponents)
    if len(exps) != base.n:
        raise DomainError(f"need {base.n} exponents, got {len(exps)}")
    return PerturbedMapping(base, ProductNoise(delta, exps, int(seed)))


def _exact_sqrt(value):
    num_root = math.isqrt(value.numerator)
    den_root = math.isqrt(value.denominator)
    if num_root * num_root == value.numerator and den_root * den_root == value.denominator:
        return Fraction(num_root, den_root)
    return None


@dataclass(frozen=True)
class NormCubeMapping(Mapping):
    """h(a) = ||a||^3 * a0 on R^m, a single-variable mapping.

    Doubling scales it by 8, yet it is not a cubic mapping.
    """

    m: int
    a0: tuple
    norm: str = "euclidean"
    mode: str = num.FLOAT
    n = 1

    def __post_init__(self):
        if self.m < 1:
            raise DomainError(f"m must be >= 1, got {self.m}")
        if self.norm not in ("euclidean", "max"):
            raise DomainError(f"norm must be 'euclidean' or 'max', got {self.norm!r}")
        a0 = self.a0 if isinstance(self.a0, (tuple, list)) else (self.a0,)
        if len(a0) != self.m:
            raise DomainError(f"anchor has length {len(a0)}, expected {self.m}")
        num.check_mode(self.mode)
        object.__setattr__(self, "a0", tuple(num.to_mode(v, self.mode) for v in a0))

    @property
    def coord_dim(self):
        return self.m

    def _norm(self, a):
        if self.norm == "max" or len(a) == 1:
            return max(abs(u) for u in a)
        squares = sum(u * u for u in a)
        if self.mode == num.EXACT:
            root = _exact_sqrt(squares)
            if root is None:
                raise DomainError(
                    f"euclidean norm of {a} is irrational; use float mode"
                )
            return root
        return math.sqrt(squares)

    def evaluate(self, point):
        a = point[0]
        if not isinstance(a, tuple):
            a = (a,)
        if len(a) != self.m:
            raise DomainError(f"argument has dimension {len(a)}, expected {self.m}")
        r = self._norm(a)
        r3 = r * r * r
        return tuple(r3 * v for v in self.a0)

    def with_mode(self, mode):
        return replace(self, mode=num.check_mode(mode))


def make_norm_cube(m, a0, norm="euclidean", mode=num.FLOAT):
    return NormCubeMapping(m, tuple(a0) if isinstance(a0, (tuple, list)) else (a0,), norm, mode)


@dataclass(frozen=True)
class FunctionMapping(Mapping):
    """Black-box adapter around a plain callable ``fn(point) -> sequence``."""

    fn: object
    n: int
    m: int = 1
    mode: str = num.EXACT

    def evaluate(self, point):
        value = self.fn(point)
        if not isinstance(value, (tuple, list)):
            value = (value,)
        if len(value) != self.m:
            raise DomainError(f"black-box returned {len(value)} components, expected {self.m}")
        return tuple(value)

    def with_mode(self, mode):
        return replace(self, mode=num.check_mode(mode))


# -- model files --------------------------------------------------------------

def model_to_dict(model):
    if isinstance(model, PerturbedMapping):
        data = model_to_dict(model.base)
        noise = model.noise
        if noise is not None:
            entry = {"kind": noise.kind, "delta": str(noise.delta), "seed": noise.seed}
            if isinstance(noise, PowerNoise):
                entry["alpha"] = str(noise.alpha)
            else:
                entry["exponents"] = [str(p) for p in noise.exponents]
            data["noise"] = entry
        return data
    if isinstance(model, PolynomialModel):
        data = {
            "n": model.n,
            "m": model.m,
            "mode": model.mode,
            "terms": [
                {"degrees": list(d), "coeff": [str(c) for c in coeff]}
                for d, coeff in model.terms
            ],
        }
        if model.max_degree != DEFAULT_MAX_DEGREE:
            data["max_degree"] = model.max_degree
        return data
    if isinstance(model, NormCubeMapping):
        return {
            "kind": "norm_cube",
            "n": 1,
            "m": model.m,
            "mode": model.mode,
            "a0": [num.format_scalar(v) for v in model.a0],
            "norm": model.norm,
        }
    raise DomainError(f"cannot serialize mapping of type {type(model).__name__}")


def _require(data, key, kind, context):
    if key not in data:
        raise ModelParseError(f"missing field {key!r}", context)
    value = data[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ModelParseError(f"field {key!r} must be an integer", context)
    if kind is list and not isinstance(value, list):
        raise ModelParseError(f"field {key!r} must be a list", context)
    return value


def model_from_dict(data, context="model"):
    if not isinstance(data, dict):
        raise ModelParseError("model must be a JSON object", context)
    mode = data.get("mode", num.EXACT)
    if mode not in num.MODES:
        raise ModelParseError(f"mode must be 'exact' or 'float', got {mode!r}", context)
    kind = data.get("kind", "polynomial")
    if kind == "norm_cube":
        m = _require(data, "m", int, context)
        a0 = [
            num.parse_rational(v, f"{context}.a0[{i}]")
            for i, v in enumerate(_require(data, "a0", list, context))
        ]
        try:
            return NormCubeMapping(m, tuple(a0), data.get("norm", "euclidean"), mode)
        except DomainError as exc:
            raise ModelParseError(str(exc), context) from None
    if kind != "polynomial":
        raise ModelParseError(f"unknown model kind {kind!r}", context)

    n = _require(data, "n", int, context)
    m = _require(data, "m", int, context)
    max_degree = data.get("max_degree", DEFAULT_MAX_DEGREE)
    terms = []
    for i, term in enumerate(_require(data, "terms", list, context)):
        tctx = f"{context}.terms[{i}]"
        if not isinstance(term, dict):
            raise ModelParseError("term must be an object", tctx)
        degrees = _require(term, "degrees", list, tctx)
        if len(degrees) != n:
            raise ModelParseError(f"degrees has length {len(degrees)}, expected n={n}", tctx)
        if any(isinstance(d, bool) or not isinstance(d, int) or d < 0 for d in degrees):
            raise ModelParseError("degrees must be non-negative integers", tctx)
        coeff = _require(term, "coeff", list, tctx)
        if len(coeff) != m:
            raise ModelParseError(f"coeff has length {len(coeff)}, expected m={m}", tctx)
        coeff = [num.parse_rational(c, f"{tctx}.coeff[{k}]") for k, c in enumerate(coeff)]
        terms.append((tuple(degrees), tuple(coeff)))
    try:
        model = PolynomialModel(n, m, tuple(terms), mode=mode, max_degree=max_degree)
    except DomainError as exc:
        raise ModelParseError(str(exc), context) from None

    noise = data.get("noise")
    if noise is None:
        return model
    nctx = f"{context}.noise"
    if not isinstance(noise, dict):
        raise ModelParseError("noise must be an object", nctx)
    delta = num.parse_rational(_require(noise, "delta", None, nctx), f"{nctx}.delta")
    seed = noise.get("seed", 0)
    nkind = noise.get("kind", "power")
    if nkind == "power":
        alpha = num.parse_rational(_require(noise, "alpha", None, nctx), f"{nctx}.alpha")
        return add_power_noise(model, delta, alpha, seed)
    if nkind == "product":
        exps = [
            num.parse_rational(p, f"{nctx}.exponents[{i}]")
            for i, p in enumerate(_require(noise, "exponents", list, nctx))
        ]
        return add_product_noise(model, delta, exps, seed)
    raise ModelParseError(f"unknown noise kind {nkind!r}", nctx)


def save_model(model, path):
    text = json.dumps(model_to_dict(model), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


def load_model(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ModelParseError(
            f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}"
        ) from None
    return model_from_dict(data, context=str(path))
