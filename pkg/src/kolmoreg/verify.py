"""Verification experiments built from manufactured pairs ``(u, g = L u)``.

Each estimate is evaluated numerically on a periodic box: the left side
``|D_1^s u|`` and the right-side factors ``|D_0^beta u|``, ``|D_0^gamma g|``
are lattice norms of Fourier multipliers, and ``g`` comes from the exact
symbolic operator unless the spectral route is requested.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .fields import (
    SUPPORT_FRACTION,
    SUPPORT_RADIUS,
    FieldSpec,
    OperatorSpec,
    dilate_spec,
    laplacian,
    symbolic_apply,
    transport,
)
from .rational import as_fraction, format_fraction
from .spectral import GridSpec, SpectralField, apply_Y, l2_norm, multiplier_norm, sample
from .structure import (
    StructureMatrix,
    dilation_law,
    ratio_scaling_exponent,
    sobolev_exponent,
)

__all__ = [
    "DEGENERATE_TOL",
    "CSV_HEADER",
    "EstimateReport",
    "ScalingReport",
    "RefinementStudy",
    "ToyScalingReport",
    "FamilySummary",
    "transport_estimate",
    "sampled_estimate",
    "maximal_regularity",
    "scaling_experiment",
    "refinement_study",
    "toy_scaling_experiment",
    "fit_slope",
    "gaussian_family",
    "family_supremum",
    "weighted_grid",
    "reports_to_csv",
    "report_to_dict",
]

DEGENERATE_TOL = 1e-12

CSV_HEADER = (
    "theorem", "beta", "gamma", "s", "sigma", "lhs", "rhs_u_factor", "rhs_g_factor",
    "rhs_combined", "ratio", "degenerate", "n", "L0", "L1", "Lt", "seed",
)


@dataclass(frozen=True)
class EstimateReport:
    """Both sides of one a priori estimate on one grid.

    For ``theorem == "maximal"`` the exponent triple is fixed to
    ``(2, 0, 2/3)``, ``rhs_g_factor`` is ``|Yu|`` and the extra norms are
    filled in; ``sigma_is_one`` marks the value excluded by the
    contradiction argument (no numerical consequence).
    """

    theorem: str
    beta: Fraction
    gamma: Fraction
    s: Fraction
    lhs: float
    rhs_u_factor: float
    rhs_g_factor: float
    rhs_combined: float
    ratio: float | None
    degenerate: bool
    grid: GridSpec
    sigma: Fraction | None = None
    yu_norm: float | None = None
    laplacian_norm: float | None = None
    g_norm: float | None = None
    quotient: float | None = None
    gain_quotient: float | None = None
    sigma_is_one: bool = False
    seed: int | None = None
    field_digest: str = ""
    structure_digest: str = ""


def _combine(lhs: float, a: float, b: float, s: float) -> tuple[float, float | None, bool]:
    combined = (a ** (1 - s) if s != 1 else 1.0) * b ** s
    if combined < DEGENERATE_TOL:
        return combined, None, True
    return combined, lhs / combined, False


def _digest(M: StructureMatrix) -> str:
    return hashlib.sha256(M.to_json().encode()).hexdigest()


def transport_estimate(
    u: FieldSpec,
    M: StructureMatrix,
    beta,
    gamma,
    grid: GridSpec,
    *,
    shift=0,
    g_route: str = "symbolic",
    seed: int | None = None,
) -> EstimateReport:
    """``|D_1^s u|`` against ``|D_0^beta u|^{1-s} |D_0^gamma Yu|^s``.

    ``shift`` adds a deliberate error to ``s`` (diagnostic mode, used to show
    that the scaling probe can tell a wrong exponent apart). ``g_route``
    selects the exact symbolic ``Yu`` or the spectral ``apply_Y``.
    """
    sobolev_exponent(beta, gamma)  # reject bad exponents before sampling
    us = sample(u, grid)
    if g_route == "symbolic":
        gs = sample(symbolic_apply(u, OperatorSpec(M)), grid)
    elif g_route == "spectral":
        gs = apply_Y(us, M)
    else:
        raise ValueError(f"unknown g_route {g_route!r}")
    rep = sampled_estimate(us, gs, beta, gamma, shift=shift)
    return replace(rep, seed=seed, field_digest=u.digest(), structure_digest=_digest(M))


def sampled_estimate(us: SpectralField, gs: SpectralField, beta, gamma, *, shift=0) -> EstimateReport:
    """Transport estimate for already sampled ``u`` and ``g``.

    Only Fourier multipliers are involved, so band-limited inputs give the
    same numbers on every grid that resolves them.
    """
    pair = sobolev_exponent(beta, gamma)
    s = pair.s + as_fraction(shift)
    sf = float(s)
    lhs = multiplier_norm(us, 1, sf)
    a = multiplier_norm(us, 0, float(pair.beta))
    b = multiplier_norm(gs, 0, float(pair.gamma))
    combined, ratio, degenerate = _combine(lhs, a, b, sf)
    return EstimateReport(
        "transport", pair.beta, pair.gamma, s, lhs, a, b, combined, ratio, degenerate, us.grid,
    )


def maximal_regularity(
    u: FieldSpec, M: StructureMatrix, sigma, grid: GridSpec, *, seed: int | None = None
) -> EstimateReport:
    """Maximal-regularity quotients for ``Yu - sigma * Delta_0 u = g``."""
    sigma = as_fraction(sigma)
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    yu = transport(u, M)
    lap = laplacian(u, M.group_axes(0))
    g = symbolic_apply(u, OperatorSpec(M, sigma))
    us = sample(u, grid)
    yu_n = l2_norm(sample(yu, grid))
    lap_n = l2_norm(sample(lap, grid))
    g_n = l2_norm(sample(g, grid))
    sf = float(sigma)
    s = Fraction(2, 3)
    lhs = multiplier_norm(us, 1, float(s))
    combined, ratio, degenerate = _combine(lhs, lap_n, yu_n, float(s))
    if g_n < DEGENERATE_TOL:
        quotient = gain = None
    else:
        quotient = (yu_n + sf * lap_n) / g_n
        gain = lhs * sf ** (1 / 3) / g_n
    return EstimateReport(
        "maximal", Fraction(2), Fraction(0), s, lhs, lap_n, yu_n, combined, ratio,
        degenerate, grid, sigma=sigma, yu_norm=yu_n, laplacian_norm=lap_n, g_norm=g_n,
        quotient=quotient, gain_quotient=gain, sigma_is_one=(sigma == 1), seed=seed,
        field_digest=u.digest(), structure_digest=_digest(M),
    )


# -- scaling ---------------------------------------------------------------------

def fit_slope(radii: Sequence, values: Sequence[float]) -> tuple[float, bool]:
    """OLS slope of ``log(value)`` against ``log(r)``.

    Returns ``(slope, flagged)``; fewer than three radii flag the fit and a
    single radius gives slope 0.
    """
    if len(radii) != len(values):
        raise ValueError("radii and values differ in length")
    if len(radii) < 2:
        return 0.0, True
    x = np.log([float(r) for r in radii])
    y = np.log(np.asarray(values, dtype=float))
    slope = float(np.polyfit(x, y, 1)[0])
    return slope, len(radii) < 3


@dataclass(frozen=True)
class ScalingReport:
    radii: tuple[Fraction, ...]
    ratios: tuple[float, ...]
    fitted_slope: float
    flagged: bool
    s: Fraction
    predicted_slope: Fraction
    reports: tuple[EstimateReport, ...] = field(repr=False, default=())


def scaling_experiment(
    u: FieldSpec,
    M: StructureMatrix,
    beta,
    gamma,
    radii: Iterable,
    grid: GridSpec,
    *,
    shift=0,
) -> ScalingReport:
    """Transport ratio along the dilation orbit ``u o delta_r``.

    With the correct exponent the ratio is scale invariant, so the fitted
    log-log slope should vanish; ``predicted_slope`` is the exact exponent
    for the ``s`` actually used.
    """
    radii = tuple(as_fraction(r) for r in radii)
    law = dilation_law(M)
    reports = []
    for r in radii:
        rep = transport_estimate(dilate_spec(u, r, law, grid), M, beta, gamma, grid, shift=shift)
        if rep.degenerate:
            raise ValueError(f"degenerate estimate at r={r}; scaling slope undefined")
        reports.append(rep)
    ratios = tuple(rep.ratio for rep in reports)
    slope, flagged = fit_slope(radii, ratios)
    s = reports[0].s
    predicted = ratio_scaling_exponent(beta, gamma, s, law)
    return ScalingReport(radii, ratios, slope, flagged, s, predicted, tuple(reports))


@dataclass(frozen=True)
class ToyScalingReport:
    """Scan over candidate gains ``s`` in one group of the two-group model.

    Exploratory: the balanced exponent is an empirical scale-invariance
    probe, not an established estimate.
    """

    group: int
    radii: tuple[Fraction, ...]
    candidates: tuple[Fraction, ...]
    slopes: tuple[float, ...]
    balanced_exponent: Fraction
    fitted_slope: float
    flagged: bool
    label: str = "exploratory"


def toy_scaling_experiment(
    u: FieldSpec,
    M: StructureMatrix,
    radii: Iterable,
    grid: GridSpec,
    *,
    group: int = 2,
    sigma=1,
) -> ToyScalingReport:
    """Find the gain ``s`` in ``group`` for which
    ``|D_g^s u| / (|Delta_0 u|^{1-s} |L u|^s)`` does not change along the
    dilation orbit.

    Scans ``s`` over ``k/20`` and then once more on a ``1/400`` mesh around
    the best coarse candidate.
    """
    if M.kappa != 2:
        raise ValueError(f"toy experiment needs kappa = 2, got {M.kappa}")
    if not 1 <= group <= M.kappa:
        raise ValueError(f"group must be 1 or 2, got {group}")
    radii = tuple(as_fraction(r) for r in radii)
    law = dilation_law(M)
    op = OperatorSpec(M, sigma)
    members = []
    for r in radii:
        f = dilate_spec(u, r, law, grid)
        fs = sample(f, grid)
        lap = l2_norm(sample(laplacian(f, M.group_axes(0)), grid))
        gn = l2_norm(sample(symbolic_apply(f, op), grid))
        members.append((fs, lap, gn))

    def slope_at(s: Fraction) -> tuple[float, bool]:
        sf = float(s)
        ratios = [multiplier_norm(fs, group, sf) / (lap ** (1 - sf) * gn ** sf) for fs, lap, gn in members]
        return fit_slope(radii, ratios)

    coarse = [Fraction(k, 20) for k in range(1, 20)]
    coarse_slopes = [slope_at(s)[0] for s in coarse]
    best = coarse[int(np.argmin(np.abs(coarse_slopes)))]
    fine = [best + Fraction(k, 400) for k in range(-20, 21) if 0 < best + Fraction(k, 400) < 1]
    fine_slopes = [slope_at(s)[0] for s in fine]
    scan = dict(zip(coarse, coarse_slopes))
    scan.update(zip(fine, fine_slopes))
    cands = sorted(scan)
    slopes = [scan[s] for s in cands]
    idx = int(np.argmin(np.abs(fine_slopes)))
    slope, flagged = slope_at(fine[idx])
    return ToyScalingReport(
        group, radii, tuple(cands), tuple(slopes), fine[idx], slope, flagged,
    )


# -- refinement ------------------------------------------------------------------

@dataclass(frozen=True)
class RefinementStudy:
    reports: tuple[EstimateReport, ...]
    differences: tuple[float | None, ...]  # |ratio_k - ratio_{k-1}| / |ratio_k|


def refinement_study(
    u: FieldSpec,
    M: StructureMatrix,
    beta,
    gamma,
    resolutions: Sequence,
    grid: GridSpec,
) -> RefinementStudy:
    """Same transport estimate at each resolution on the box of ``grid``."""
    if list(resolutions) != sorted(resolutions, key=lambda n: np.prod(n)):
        raise ValueError("resolutions must be increasing")
    reports = [transport_estimate(u, M, beta, gamma, grid.with_n(n)) for n in resolutions]
    diffs = []
    for prev, cur in zip(reports, reports[1:]):
        if prev.degenerate or cur.degenerate:
            diffs.append(None)
        else:
            diffs.append(abs(cur.ratio - prev.ratio) / abs(cur.ratio))
    return RefinementStudy(tuple(reports), tuple(diffs))


# -- families --------------------------------------------------------------------

def gaussian_family(
    grid: GridSpec,
    count: int = 50,
    seed: int = 0,
    width_range=(Fraction(3, 4), Fraction(5, 4)),
    degree_cap: int = 2,
) -> list[FieldSpec]:
    """Seeded Gaussians with random centers, widths and polynomial prefactors.

    Widths are rationals with denominator 16 in ``width_range``; centers are
    drawn (denominator 16) so every 6-sigma box keeps the support margin;
    the prefactor is ``1 + sum c_a z^a`` over a few random monomials of degree
    at most ``degree_cap`` with coefficients in ``[-1, 1]``.
    """
    rng = np.random.default_rng(seed)
    nv = grid.n_axes
    lo, hi = (as_fraction(w) for w in width_range)
    half = grid.half_widths
    out = []
    for _ in range(count):
        widths = [Fraction(int(rng.integers(int(lo * 16), int(hi * 16) + 1)), 16) for _ in range(nv)]
        center = []
        for w, L in zip(widths, half):
            room = SUPPORT_FRACTION * L - SUPPORT_RADIUS * float(w)
            k = int(math.floor(max(room, 0.0) * 16))
            center.append(Fraction(int(rng.integers(-k, k + 1)), 16))
        poly = {(0,) * nv: Fraction(1)}
        for _ in range(int(rng.integers(0, 4))):
            deg = int(rng.integers(1, degree_cap + 1)) if degree_cap else 0
            powers = [0] * nv
            for a in rng.integers(0, nv, size=deg):
                powers[int(a)] += 1
            coeff = Fraction(int(rng.integers(-8, 9)), 8)
            poly[tuple(powers)] = poly.get(tuple(powers), Fraction(0)) + coeff
        f = FieldSpec.from_terms(nv, [(poly, center, widths)])
        if f.is_zero():
            f = FieldSpec.from_terms(nv, [({(0,) * nv: 1}, center, widths)])
        out.append(f)
    return out


@dataclass(frozen=True)
class FamilySummary:
    reports: tuple[EstimateReport, ...]
    supremum: float | None
    n_degenerate: int


def family_supremum(
    family: Sequence[FieldSpec],
    M: StructureMatrix,
    beta,
    gamma,
    grid: GridSpec,
    *,
    threads: int = 1,
    seed: int | None = None,
) -> FamilySummary:
    """Empirical stand-in for the constant: sup of the ratio over ``family``.

    Degenerate members are reported but excluded from the supremum. Results
    keep the order of ``family`` whatever ``threads`` is.
    """
    def one(f):
        return transport_estimate(f, M, beta, gamma, grid, seed=seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(one, family))
    else:
        reports = [one(f) for f in family]
    good = [r.ratio for r in reports if not r.degenerate]
    return FamilySummary(tuple(reports), max(good) if good else None, len(reports) - len(good))


def weighted_grid(M: StructureMatrix, L, Lt, n: int, r_max=1, budget=None) -> GridSpec:
    """Grid whose axis counts grow with the dilation weight.

    An axis of weight ``a`` gets ``n * 2^ceil(log2(r_max^(a-1)))`` points, so the
    narrowest member of a dilation sweep up to ``r_max`` is resolved on every
    axis about as well as on the weight-1 axes. ``r_max = 1`` is a uniform grid.
    """
    law = dilation_law(M)
    r_max = float(as_fraction(r_max))
    counts = []
    for a in law.axis_weights():
        factor = r_max ** (a - 1)
        counts.append(n * 2 ** max(0, math.ceil(math.log2(factor) - 1e-12)))
    kwargs = {} if budget is None else {"budget": budget}
    return GridSpec.for_structure(M, L, Lt, tuple(counts), **kwargs)


# -- serialization ----------------------------------------------------------------

def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Fraction):
        return format_fraction(x)
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _n_label(grid: GridSpec) -> str:
    return "x".join(str(k) for k in grid.n) if isinstance(grid.n, tuple) else str(grid.n)


def reports_to_csv(reports: Iterable[EstimateReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        g = r.grid
        w.writerow([
            r.theorem, _num(r.beta), _num(r.gamma), _num(r.s), _num(r.sigma),
            _num(r.lhs), _num(r.rhs_u_factor), _num(r.rhs_g_factor), _num(r.rhs_combined),
            _num(r.ratio), _num(r.degenerate), _n_label(g), _num(g.L[0]), _num(g.L[1]),
            _num(g.Lt), _num(r.seed),
        ])
    return buf.getvalue()


def report_to_dict(r: EstimateReport) -> dict:
    out = {
        "theorem": r.theorem,
        "beta": format_fraction(r.beta),
        "gamma": format_fraction(r.gamma),
        "s": format_fraction(r.s),
        "sigma": None if r.sigma is None else format_fraction(r.sigma),
        "lhs": r.lhs,
        "rhs_u_factor": r.rhs_u_factor,
        "rhs_g_factor": r.rhs_g_factor,
        "rhs_combined": r.rhs_combined,
        "ratio": r.ratio,
        "degenerate": r.degenerate,
        "grid": r.grid.to_dict(),
        "seed": r.seed,
        "field_hash": r.field_digest,
        "structure_hash": r.structure_digest,
    }
    if r.theorem == "maximal":
        out.update({
            "yu_norm": r.yu_norm,
            "laplacian_norm": r.laplacian_norm,
            "g_norm": r.g_norm,
            "quotient": r.quotient,
            "gain_quotient": r.gain_quotient,
            "sigma_is_one": r.sigma_is_one,
        })
    return out
