"""Closed-form test functions: sums of polynomial x anisotropic Gaussian terms.

A :class:`FieldSpec` over the variables ``z = (x_1, ..., x_N, t)`` is

    sum_k p_k(z) * exp(-sum_j ((z_j - c_kj) / w_kj)^2)

with rational polynomial coefficients, centers and widths, so that ``Y``,
``Delta_0`` and anisotropic dilations act exactly. A width of ``None`` drops
that variable from the exponent (the term is then constant along it, which
is how fields independent of ``x^(1)`` or ``t`` are written).
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .rational import as_fraction, format_fraction
from .structure import DilationLaw, StructureMatrix

__all__ = [
    "DEFAULT_DEGREE_CAP",
    "SUPPORT_RADIUS",
    "SUPPORT_FRACTION",
    "DegreeCapError",
    "SupportError",
    "Term",
    "FieldSpec",
    "OperatorSpec",
    "gaussian",
    "derivative",
    "transport",
    "laplacian",
    "symbolic_apply",
    "dilate_spec",
    "evaluate",
]

DEFAULT_DEGREE_CAP = 6
# exp(-(z/w)^2) = exp(-18) at |z| = 3*sqrt(2)*w, i.e. six standard deviations
SUPPORT_RADIUS = 3 * math.sqrt(2)
# 6-sigma boxes must stay inside this fraction of every half-width
SUPPORT_FRACTION = 0.75

Powers = tuple[int, ...]
Poly = tuple[tuple[Powers, Fraction], ...]


class DegreeCapError(ValueError):
    pass


class SupportError(ValueError):
    pass


def _clean(poly: Mapping[Powers, Fraction]) -> Poly:
    return tuple(sorted((k, v) for k, v in poly.items() if v != 0))


@dataclass(frozen=True)
class Term:
    poly: Poly
    center: tuple[Fraction, ...]
    widths: tuple[Fraction | None, ...]

    @property
    def degree(self) -> int:
        return max((sum(p) for p, _ in self.poly), default=0)

    @property
    def envelope(self) -> tuple:
        return self.center, self.widths


@dataclass(frozen=True)
class FieldSpec:
    n_vars: int
    terms: tuple[Term, ...]

    @classmethod
    def zero(cls, n_vars: int) -> "FieldSpec":
        return cls(n_vars, ())

    @classmethod
    def from_terms(cls, n_vars: int, terms: Iterable[tuple]) -> "FieldSpec":
        """Build from ``(poly, center, widths)`` triples.

        ``poly`` maps power tuples to coefficients; widths may contain ``None``.
        """
        collected: dict[tuple, dict[Powers, Fraction]] = defaultdict(lambda: defaultdict(Fraction))
        order = []
        for poly, center, widths in terms:
            center = tuple(as_fraction(c) for c in center)
            widths = tuple(None if w is None else as_fraction(w) for w in widths)
            if len(center) != n_vars or len(widths) != n_vars:
                raise ValueError(f"center/widths must have length {n_vars}")
            if any(w is not None and w <= 0 for w in widths):
                raise ValueError(f"widths must be positive, got {widths}")
            # the center is meaningless along an absent variable
            center = tuple(Fraction(0) if w is None else c for c, w in zip(center, widths))
            key = (center, widths)
            if key not in collected:
                order.append(key)
            acc = collected[key]
            items = poly.items() if isinstance(poly, Mapping) else poly
            for powers, coeff in items:
                powers = tuple(int(p) for p in powers)
                if len(powers) != n_vars or min(powers) < 0:
                    raise ValueError(f"bad power tuple {powers}")
                acc[powers] += as_fraction(coeff)
        out = []
        for key in order:
            poly = _clean(collected[key])
            if poly:
                out.append(Term(poly, key[0], key[1]))
        return cls(n_vars, tuple(out))

    @property
    def degree(self) -> int:
        return max((t.degree for t in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "FieldSpec") -> "FieldSpec":
        return FieldSpec.from_terms(
            self.n_vars, [(t.poly, t.center, t.widths) for t in self.terms + other.terms]
        )

    def scale(self, c) -> "FieldSpec":
        c = as_fraction(c)
        return FieldSpec.from_terms(
            self.n_vars,
            [({p: c * v for p, v in t.poly}, t.center, t.widths) for t in self.terms],
        )

    def __sub__(self, other: "FieldSpec") -> "FieldSpec":
        return self + other.scale(-1)

    # -- serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "terms": [
                {
                    "poly": [
                        {"coeff": format_fraction(v), "powers": list(p)} for p, v in t.poly
                    ],
                    "center": [format_fraction(c) for c in t.center],
                    "widths": [None if w is None else format_fraction(w) for w in t.widths],
                }
                for t in self.terms
            ]
        }

    @classmethod
    def from_dict(cls, data: dict, n_vars: int | None = None) -> "FieldSpec":
        terms = data["terms"]
        if n_vars is None:
            if not terms:
                raise ValueError("cannot infer the variable count of an empty FieldSpec")
            n_vars = len(terms[0]["center"])
        return cls.from_terms(
            n_vars,
            [
                ({tuple(m["powers"]): m["coeff"] for m in t["poly"]}, t["center"], t["widths"])
                for t in terms
            ],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def gaussian(n_vars: int, widths=None, center=None, coeff=1) -> FieldSpec:
    """``coeff * exp(-sum((z - center) / widths)^2)``; defaults to unit widths at 0."""
    widths = [1] * n_vars if widths is None else list(widths)
    center = [0] * n_vars if center is None else list(center)
    return FieldSpec.from_terms(n_vars, [({(0,) * n_vars: coeff}, center, widths)])


@dataclass(frozen=True)
class OperatorSpec:
    """``L = Y - sigma * Delta_0``; ``sigma = 0`` is pure transport."""

    structure: StructureMatrix
    sigma: Fraction = Fraction(0)

    def __post_init__(self):
        sigma = as_fraction(self.sigma)
        if sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        object.__setattr__(self, "sigma", sigma)


# -- symbolic calculus -----------------------------------------------------------

def _term_derivative(t: Term, axis: int) -> dict[Powers, Fraction]:
    out: dict[Powers, Fraction] = defaultdict(Fraction)
    w = t.widths[axis]
    for p, v in t.poly:
        if p[axis]:
            q = list(p)
            q[axis] -= 1
            out[tuple(q)] += v * p[axis]
        if w is not None:
            # d/dz exp(-((z-c)/w)^2) = -2 (z - c) / w^2 * exp(...)
            k = -2 * v / (w * w)
            q = list(p)
            q[axis] += 1
            out[tuple(q)] += k
            if t.center[axis]:
                out[p] -= k * t.center[axis]
    return out


def _times_coordinate(poly: Mapping[Powers, Fraction], axis: int) -> dict[Powers, Fraction]:
    out = {}
    for p, v in poly.items():
        q = list(p)
        q[axis] += 1
        out[tuple(q)] = v
    return out


def _check_cap(f: FieldSpec, cap: int | None) -> FieldSpec:
    if cap is not None and f.degree > cap:
        raise DegreeCapError(f"polynomial degree {f.degree} exceeds cap {cap}")
    return f


def derivative(f: FieldSpec, axis: int) -> FieldSpec:
    """Exact partial derivative along ``axis`` (0-based, time is the last axis)."""
    return FieldSpec.from_terms(
        f.n_vars, [(_term_derivative(t, axis), t.center, t.widths) for t in f.terms]
    )


def transport(f: FieldSpec, M: StructureMatrix) -> FieldSpec:
    """``Y f = sum_ij b_ij x_j d_i f - d_t f``."""
    if f.n_vars != M.N + 1:
        raise ValueError(f"field has {f.n_vars} variables, structure needs {M.N + 1}")
    entries = M.entries()
    t_axis = M.N
    pieces = []
    for term in f.terms:
        acc: dict[Powers, Fraction] = defaultdict(Fraction)
        for i in {i for i, _, _ in entries}:
            d = _term_derivative(term, i)
            for _, j, b in (e for e in entries if e[0] == i):
                for p, v in _times_coordinate(d, j).items():
                    acc[p] += b * v
        for p, v in _term_derivative(term, t_axis).items():
            acc[p] -= v
        pieces.append((acc, term.center, term.widths))
    return FieldSpec.from_terms(f.n_vars, pieces)


def laplacian(f: FieldSpec, axes: Iterable[int]) -> FieldSpec:
    """Sum of second derivatives over ``axes``."""
    out = FieldSpec.zero(f.n_vars)
    for a in axes:
        out = out + derivative(derivative(f, a), a)
    return out


def symbolic_apply(
    f: FieldSpec, op: OperatorSpec, degree_cap: int | None = DEFAULT_DEGREE_CAP
) -> FieldSpec:
    """Exact ``Y f - sigma * Delta_0 f`` (the manufactured right-hand side)."""
    M = op.structure
    g = transport(f, M)
    if op.sigma:
        g = g - laplacian(f, M.group_axes(0)).scale(op.sigma)
    return _check_cap(g, degree_cap)


def dilate_spec(f: FieldSpec, r, law: DilationLaw, grid=None) -> FieldSpec:
    """Closed form of ``z -> f(r^{a_1} z_1, ..., r^{a_n} z_n)``.

    ``a`` are the axis weights of ``law`` (group weight per space axis, time
    weight last). Centers and widths are divided by ``r^a``; monomials pick
    up ``r^{a . powers}``. When ``grid`` is given the result must fit its box.
    """
    r = as_fraction(r)
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    a = law.axis_weights()
    if len(a) != f.n_vars:
        raise ValueError(f"law has {len(a)} axes, field has {f.n_vars}")
    scale = [r ** k for k in a]
    terms = []
    for t in f.terms:
        poly = {
            p: v * math.prod((s ** e for s, e in zip(scale, p)), start=Fraction(1))
            for p, v in t.poly
        }
        center = [c / s for c, s in zip(t.center, scale)]
        widths = [None if w is None else w / s for w, s in zip(t.widths, scale)]
        terms.append((poly, center, widths))
    out = FieldSpec.from_terms(f.n_vars, terms)
    if grid is not None:
        try:
            check_support(out, grid.half_widths)
        except SupportError as exc:
            raise SupportError(f"dilated field (r={r}) overflows the box, enlarge it: {exc}")
    return out


def check_support(f: FieldSpec, half_widths: Sequence[float]) -> None:
    """Raise :class:`SupportError` naming the first term/axis whose 6-sigma box
    leaves ``SUPPORT_FRACTION`` of the half-width."""
    for k, t in enumerate(f.terms):
        for j, (c, w) in enumerate(zip(t.center, t.widths)):
            if w is None:
                if any(p[j] for p, _ in t.poly):
                    raise SupportError(
                        f"term {k}, axis {j}: polynomial grows along an axis with no Gaussian decay"
                    )
                continue
            reach = abs(float(c)) + SUPPORT_RADIUS * float(w)
            limit = SUPPORT_FRACTION * half_widths[j]
            if reach > limit:
                raise SupportError(
                    f"term {k}, axis {j}: 6-sigma reach {reach:.4g} exceeds "
                    f"{SUPPORT_FRACTION:g} * L = {limit:.4g}"
                )


def evaluate(f: FieldSpec, axes: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate on the tensor grid spanned by the 1-D coordinate arrays ``axes``."""
    shape = tuple(len(a) for a in axes)
    out = np.zeros(shape)
    nd = len(axes)
    for t in f.terms:
        env = []
        for j, (x, c, w) in enumerate(zip(axes, t.center, t.widths)):
            env.append(np.ones_like(x) if w is None else np.exp(-(((x - float(c)) / float(w)) ** 2)))
        for p, v in t.poly:
            factors = [e * x ** k if k else e for e, x, k in zip(env, axes, p)]
            prod = np.asarray(float(v))
            for j, fac in enumerate(factors):
                prod = prod * fac.reshape((-1,) + (1,) * (nd - 1 - j))
            out += prod
    return out
