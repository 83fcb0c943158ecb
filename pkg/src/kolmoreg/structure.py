"""Exact algebra of the block drift matrix.

The transport operator is ``Y = <Bx, grad> - d/dt`` with ``B`` block lower
triangular: block ``i`` (shape ``m_i x m_{i-1}``) sits in block-row ``i``,
block-column ``i-1``. Everything in this module is computed with
:class:`fractions.Fraction`; floats are rejected at the boundary.

Coordinate indices inside a group (``i`` in ``commutator`` and friends) are
1-based, matching the usual ``x^(0)_1, ..., x^(0)_{m0}`` labelling. Group
indices are 0-based.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from . import rational as rq
from .rational import Matrix, as_fraction, format_fraction

__all__ = [
    "StructureError",
    "ExponentDomainError",
    "StructureMatrix",
    "Check",
    "ValidationReport",
    "validate_structure",
    "kalman_rank",
    "RowOp",
    "PivotForm",
    "pivot_form",
    "commutator",
    "iterated_commutator",
    "CommutatorExpansion",
    "commutator_expansion",
    "recover_derivative",
    "brackets_to_derivatives",
    "ExponentPair",
    "sobolev_exponent",
    "InterpolationCertificate",
    "interpolation_theta",
    "DilationLaw",
    "dilation_law",
    "ratio_scaling_exponent",
    "fokker_planck",
    "toy_model",
    "random_structure",
]


class StructureError(ValueError):
    """Dims and blocks do not describe a block matrix at all."""


class ExponentDomainError(ValueError):
    """An exponent pair violates the hypotheses of the transport estimate."""


@dataclass(frozen=True)
class StructureMatrix:
    """Block lower-triangular drift matrix with group sizes ``dims``.

    ``blocks[i-1]`` is the ``dims[i] x dims[i-1]`` block ``B_i``. Only shapes
    are checked at construction; rank and ordering live in
    :func:`validate_structure`.
    """

    dims: tuple[int, ...]
    blocks: tuple[Matrix, ...]

    def __init__(self, dims: Sequence[int], blocks: Sequence[Sequence[Sequence]]):
        dims = tuple(int(d) for d in dims)
        if len(dims) < 2:
            raise StructureError("need at least two variable groups (kappa >= 1)")
        if len(blocks) != len(dims) - 1:
            raise StructureError(
                f"{len(dims)} groups need {len(dims) - 1} blocks, got {len(blocks)}"
            )
        mats = []
        for i, blk in enumerate(blocks, start=1):
            m = rq.to_matrix(blk)
            rows = len(m)
            cols = {len(r) for r in m}
            if rows != dims[i] or (rows and cols != {dims[i - 1]}):
                got = f"{rows}x{sorted(cols)[0] if len(cols) == 1 else sorted(cols)}"
                raise StructureError(
                    f"block {i} must be {dims[i]}x{dims[i - 1]}, got {got}"
                )
            mats.append(m)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "blocks", tuple(mats))

    @property
    def N(self) -> int:
        return sum(self.dims)

    @property
    def kappa(self) -> int:
        return len(self.dims) - 1

    def offsets(self) -> tuple[int, ...]:
        """Index of the first coordinate of every group."""
        out, acc = [], 0
        for d in self.dims:
            out.append(acc)
            acc += d
        return tuple(out)

    def group_axes(self, group: int) -> range:
        off = self.offsets()[group]
        return range(off, off + self.dims[group])

    @property
    def B(self) -> Matrix:
        """The assembled ``N x N`` matrix."""
        N = self.N
        rows = [[Fraction(0)] * N for _ in range(N)]
        off = self.offsets()
        for i, blk in enumerate(self.blocks, start=1):
            for a, row in enumerate(blk):
                for b, v in enumerate(row):
                    rows[off[i] + a][off[i - 1] + b] = v
        return tuple(tuple(r) for r in rows)

    def entries(self) -> list[tuple[int, int, Fraction]]:
        """Nonzero ``(row, col, value)`` triples of ``B`` (0-based)."""
        return [
            (i, j, v) for i, row in enumerate(self.B) for j, v in enumerate(row) if v
        ]

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "blocks": [
                [[format_fraction(v) for v in row] for row in blk] for blk in self.blocks
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StructureMatrix":
        try:
            dims = data["dims"]
            blocks = data["blocks"]
        except (KeyError, TypeError) as exc:
            raise StructureError(f"structure JSON needs 'dims' and 'blocks': {exc}")
        return cls(dims, blocks)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "StructureMatrix":
        return cls.from_dict(json.loads(text))


def fokker_planck(d: int) -> StructureMatrix:
    """Kinetic Fokker-Planck drift: ``dims=(d, d)``, ``B_1 = I_d``."""
    return StructureMatrix((d, d), [rq.identity(d)])


def toy_model(d: int) -> StructureMatrix:
    """Two groups of spatial variables: ``dims=(d, d, d)``, ``B_1 = B_2 = I_d``."""
    return StructureMatrix((d, d, d), [rq.identity(d), rq.identity(d)])


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    message: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def valid(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_failure(self) -> Check | None:
        return next((c for c in self.checks if not c.passed), None)

    def __bool__(self) -> bool:
        return self.valid

    def summary(self) -> str:
        bad = self.first_failure
        return "valid" if bad is None else f"invalid: {bad.message}"


def validate_structure(M: StructureMatrix) -> ValidationReport:
    """Check group ordering and full rank of every block."""
    checks = []
    dims = M.dims
    pos = [i for i, d in enumerate(dims) if d < 1]
    checks.append(Check(
        "dims_positive", not pos,
        "all group sizes >= 1" if not pos else f"m_{pos[0]} = {dims[pos[0]]} < 1",
    ))
    inc = [i for i in range(1, len(dims)) if dims[i] > dims[i - 1]]
    checks.append(Check(
        "dims_non_increasing", not inc,
        "group sizes non-increasing" if not inc
        else f"m_{inc[0]} = {dims[inc[0]]} > m_{inc[0] - 1} = {dims[inc[0] - 1]}",
    ))
    checks.append(Check("dims_sum", sum(dims) == M.N, f"sum(dims) = N = {M.N}"))
    for i, blk in enumerate(M.blocks, start=1):
        r = rq.rank(blk)
        ok = r == dims[i]
        checks.append(Check(
            f"block_{i}_rank", ok,
            f"B_{i} has full rank {r}" if ok else f"B_{i} has rank {r} < m_{i}={dims[i]}",
        ))
    return ValidationReport(tuple(checks))


def kalman_rank(M: StructureMatrix) -> int:
    """Rank of ``[E, BE, ..., B^{N-1}E]`` with ``E`` spanning group 0."""
    N, m0 = M.N, M.dims[0]
    B = M.B
    E = tuple(tuple(Fraction(int(i == j)) for j in range(m0)) for i in range(N))
    cols = [E]
    cur = E
    for _ in range(N - 1):
        cur = rq.matmul(B, cur)
        cols.append(cur)
    return rq.rank(rq.hstack(*cols))


# -- pivot reduction ------------------------------------------------------------

@dataclass(frozen=True)
class RowOp:
    """``kind`` is ``"swap"`` (rows ``i``, ``j``) or ``"add"`` (row_i += factor*row_j)."""

    kind: str
    i: int
    j: int
    factor: Fraction = Fraction(0)

    def apply(self, rows: list[list[Fraction]]) -> None:
        if self.kind == "swap":
            rows[self.i], rows[self.j] = rows[self.j], rows[self.i]
        else:
            rows[self.i] = [a + self.factor * b for a, b in zip(rows[self.i], rows[self.j])]

    def inverse(self) -> "RowOp":
        if self.kind == "swap":
            return self
        return RowOp("add", self.i, self.j, -self.factor)


@dataclass(frozen=True)
class PivotForm:
    structure: StructureMatrix
    ops: tuple[RowOp, ...]
    pivot_columns: tuple[int, ...]  # 0-based columns of B_1 holding the pivots

    def replay(self, matrix: Matrix) -> Matrix:
        rows = [list(r) for r in matrix]
        for op in self.ops:
            op.apply(rows)
        return tuple(tuple(r) for r in rows)

    def undo(self, matrix: Matrix) -> Matrix:
        rows = [list(r) for r in matrix]
        for op in reversed(self.ops):
            op.inverse().apply(rows)
        return tuple(tuple(r) for r in rows)

    @property
    def transform(self) -> Matrix:
        """``T`` with ``T @ B_1(original) == B_1(pivot form)``."""
        return self.replay(rq.identity(self.structure.dims[1]))


def pivot_form(M: StructureMatrix) -> PivotForm:
    """Row-reduce ``B_1`` to an upper staircase.

    Partial pivoting by largest absolute value, leftmost column first. The row
    operations change basis in the ``x^(1)`` group, so for ``kappa >= 2`` the
    next block is right-multiplied by ``T^{-1}`` to keep the operator the same.
    """
    B1 = M.blocks[0]
    m1, m0 = rq.shape(B1)
    rows = [list(r) for r in B1]
    ops: list[RowOp] = []
    pivots: list[int] = []
    r = 0
    for c in range(m0):
        if r == m1:
            break
        best = max(range(r, m1), key=lambda k: (abs(rows[k][c]), -k))
        if rows[best][c] == 0:
            continue
        if best != r:
            op = RowOp("swap", r, best)
            op.apply(rows)
            ops.append(op)
        for k in range(r + 1, m1):
            if rows[k][c]:
                op = RowOp("add", k, r, -rows[k][c] / rows[r][c])
                op.apply(rows)
                ops.append(op)
        pivots.append(c)
        r += 1
    if len(pivots) < m1:
        raise StructureError(f"B_1 has rank {len(pivots)} < m_1={m1}; no pivot form")
    new_blocks = [tuple(tuple(x) for x in rows)]
    if M.kappa >= 2:
        T = PivotForm(M, tuple(ops), tuple(pivots)).transform
        new_blocks.append(rq.matmul(M.blocks[1], _inverse(T)))
        new_blocks.extend(M.blocks[2:])
    return PivotForm(StructureMatrix(M.dims, new_blocks), tuple(ops), tuple(pivots))


def _inverse(T: Matrix) -> Matrix:
    n = len(T)
    aug = [list(T[i]) + list(rq.identity(n)[i]) for i in range(n)]
    for c in range(n):
        p = next(k for k in range(c, n) if aug[k][c] != 0)
        aug[c], aug[p] = aug[p], aug[c]
        pv = aug[c][c]
        aug[c] = [x / pv for x in aug[c]]
        for k in range(n):
            if k != c and aug[k][c]:
                f = aug[k][c]
                aug[k] = [x - f * y for x, y in zip(aug[k], aug[c])]
    return tuple(tuple(r[n:]) for r in aug)


def _is_staircase(B1: Matrix) -> tuple[bool, tuple[int, ...]]:
    pivots = []
    last = -1
    for row in B1:
        lead = next((j for j, v in enumerate(row) if v != 0), None)
        if lead is None or lead <= last:
            return False, ()
        pivots.append(lead)
        last = lead
    return True, tuple(pivots)


# -- commutators ---------------------------------------------------------------

def commutator(M: StructureMatrix, i: int) -> tuple[Fraction, ...]:
    """Coefficients of ``[d/dx^(0)_i, Y]`` over ``d/dx^(1)_1 .. d/dx^(1)_{m1}``.

    This is column ``i`` of ``B_1`` (``i`` is 1-based).
    """
    m0 = M.dims[0]
    if not 1 <= i <= m0:
        raise IndexError(f"i={i} outside 1..{m0}")
    return tuple(row[i - 1] for row in M.blocks[0])


def iterated_commutator(M: StructureMatrix, i: int, depth: int) -> tuple[Fraction, ...]:
    """``[...[[d/dx^(0)_i, Y], Y]..., Y]`` with ``depth`` brackets.

    Constant field on group ``depth``; coefficients are ``B_depth ... B_1 e_i``.
    """
    m0 = M.dims[0]
    if not 1 <= i <= m0:
        raise IndexError(f"i={i} outside 1..{m0}")
    if not 1 <= depth <= M.kappa:
        raise IndexError(f"depth={depth} outside 1..{M.kappa}")
    vec = tuple(Fraction(int(k == i - 1)) for k in range(m0))
    for blk in M.blocks[:depth]:
        vec = tuple(sum((a * b for a, b in zip(row, vec)), Fraction(0)) for row in blk)
    return vec


@dataclass(frozen=True)
class CommutatorExpansion:
    """``d/dx^(1)_i = sum_{j<i} c_j d/dx^(1)_j + c_i [d/dx^(0)_{p_i}, Y]``.

    ``pivot_column`` is ``p_i`` (1-based); it equals ``i`` when the pivots sit on
    the diagonal.
    """

    group_index: int
    coefficients: tuple[Fraction, ...]
    pivot_column: int


def commutator_expansion(M: StructureMatrix, i: int) -> CommutatorExpansion:
    """Triangular solve for the ``i``-th derivative of group 1 (1-based).

    ``M`` must already be in pivot form.
    """
    m1 = M.dims[1]
    if not 1 <= i <= m1:
        raise IndexError(f"i={i} outside 1..{m1}")
    ok, pivots = _is_staircase(M.blocks[0])
    if not ok:
        raise StructureError("B_1 is not in staircase form; call pivot_form first")
    p = pivots[i - 1]
    col = commutator(M, p + 1)
    piv = col[i - 1]
    if piv == 0:
        raise StructureError(f"zero pivot in row {i}")
    coeffs = tuple(-col[j] / piv for j in range(i - 1)) + (1 / piv,)
    return CommutatorExpansion(i, coeffs, p + 1)


def recover_derivative(M: StructureMatrix, i: int) -> tuple[Fraction, ...]:
    """Weights ``a_k`` with ``d/dx^(1)_i = sum_k a_k [d/dx^(0)_{p_k}, Y]``.

    Obtained by substituting the expansions of ``j < i`` recursively. The
    returned tuple has length ``m1``; entries past ``i`` are zero.
    """
    m1 = M.dims[1]
    table: list[tuple[Fraction, ...]] = []
    for k in range(1, i + 1):
        exp = commutator_expansion(M, k)
        w = [Fraction(0)] * m1
        for j, c in enumerate(exp.coefficients[:-1]):
            for idx, a in enumerate(table[j]):
                w[idx] += c * a
        w[k - 1] += exp.coefficients[-1]
        table.append(tuple(w))
    return table[-1]


def brackets_to_derivatives(M: StructureMatrix, weights: Iterable[Fraction]) -> tuple[Fraction, ...]:
    """Expand ``sum_k w_k [d/dx^(0)_{p_k}, Y]`` back over ``d/dx^(1)_j``."""
    _, pivots = _is_staircase(M.blocks[0])
    out = [Fraction(0)] * M.dims[1]
    for k, w in enumerate(weights):
        if w:
            for j, c in enumerate(commutator(M, pivots[k] + 1)):
                out[j] += w * c
    return tuple(out)


# -- exponent calculus -----------------------------------------------------------

@dataclass(frozen=True)
class ExponentPair:
    beta: Fraction
    gamma: Fraction
    s: Fraction

    def __iter__(self):
        return iter((self.beta, self.gamma, self.s))


def sobolev_exponent(beta, gamma) -> ExponentPair:
    """Gain ``s = beta / (1 - gamma + beta)`` in the degenerate group.

    Requires ``gamma >= 0`` and ``0 <= 1 - gamma <= beta``; the pair
    ``1 - gamma = beta = 0`` gives ``s = 1``.
    """
    beta, gamma = as_fraction(beta), as_fraction(gamma)
    if gamma < 0:
        raise ExponentDomainError(f"gamma >= 0 violated: gamma = {gamma}")
    if 1 - gamma < 0:
        raise ExponentDomainError(f"1 - gamma >= 0 violated: 1 - gamma = {1 - gamma}")
    if 1 - gamma > beta:
        raise ExponentDomainError(
            f"1 - gamma <= beta violated: 1 - gamma = {1 - gamma} > beta = {beta}"
        )
    if beta == 0:  # forces 1 - gamma == 0
        return ExponentPair(beta, gamma, Fraction(1))
    return ExponentPair(beta, gamma, beta / (1 - gamma + beta))


@dataclass(frozen=True)
class InterpolationCertificate:
    theta: Fraction
    s: Fraction
    beta: Fraction | None
    gamma: Fraction | None
    gain_identity: bool  # 1 - 2(1 - s) == theta * s
    weight_identity: bool | None  # 1 - gamma == (1 - theta) * beta

    @property
    def holds(self) -> bool:
        return self.gain_identity and self.weight_identity is not False


def interpolation_theta(s_or_pair) -> InterpolationCertificate:
    """``theta = 2 - 1/s`` with both interpolation identities checked exactly.

    Pass an :class:`ExponentPair` to also check ``1 - gamma = (1 - theta) beta``;
    a bare ``s`` only certifies the gain identity.
    """
    if isinstance(s_or_pair, ExponentPair):
        beta, gamma, s = s_or_pair
    else:
        beta = gamma = None
        s = as_fraction(s_or_pair)
    if not Fraction(1, 2) <= s <= 1:
        raise ExponentDomainError(f"s = {s} outside [1/2, 1]")
    theta = 2 - 1 / s
    gain = 1 - 2 * (1 - s) == theta * s
    weight = None if beta is None else (1 - gamma == (1 - theta) * beta)
    return InterpolationCertificate(theta, s, beta, gamma, gain, weight)


# -- dilations -------------------------------------------------------------------

@dataclass(frozen=True)
class DilationLaw:
    """Anisotropic dilation ``(x^(i), t) -> (r^{2i+1} x^(i), r^2 t)``."""

    group_weights: tuple[int, ...]
    dims: tuple[int, ...]
    time_weight: int = 2
    operator_degree: int = 2

    @property
    def Q(self) -> int:
        return sum(w * m for w, m in zip(self.group_weights, self.dims)) + self.time_weight

    def axis_weights(self) -> tuple[int, ...]:
        """Weight of every axis, space axes first and time last."""
        out = []
        for w, m in zip(self.group_weights, self.dims):
            out.extend([w] * m)
        return tuple(out) + (self.time_weight,)


def dilation_law(M: StructureMatrix) -> DilationLaw:
    return DilationLaw(tuple(2 * i + 1 for i in range(len(M.dims))), M.dims)


def ratio_scaling_exponent(beta, gamma, s, law: DilationLaw, group: int = 1) -> Fraction:
    """Power of ``r`` picked up by ``|D_g^s u| / (|D_0^beta u|^{1-s} |D_0^gamma Yu|^s)``
    when ``u`` is replaced by ``u o delta_r``.

    Zero exactly when the exponents are scale balanced; for ``group=1`` that
    is ``s = beta / (1 - gamma + beta)``.
    """
    beta, gamma, s = as_fraction(beta), as_fraction(gamma), as_fraction(s)
    w0 = law.group_weights[0]
    wg = law.group_weights[group]
    deg = law.operator_degree
    return wg * s - (1 - s) * beta * w0 - s * (deg + gamma * w0)


# -- random matrices -------------------------------------------------------------

def _random_fraction(rng: random.Random, bound: int, max_den: int) -> Fraction:
    den = rng.randint(1, max_den)
    num = rng.randint(-bound * den, bound * den)
    return Fraction(num, den)


def random_structure(
    rng: random.Random,
    N_max: int = 6,
    kappa: int = 1,
    bound: int = 5,
    max_den: int = 4,
) -> StructureMatrix:
    """Random valid structure with rational entries in ``[-bound, bound]``.

    Group sizes are drawn as a non-increasing partition; blocks are
    rejection-sampled until they have full rank.
    """
    N = rng.randint(kappa + 1, N_max)
    dims = _random_partition(rng, N, kappa + 1)
    blocks = []
    for i in range(1, kappa + 1):
        while True:
            blk = tuple(
                tuple(_random_fraction(rng, bound, max_den) for _ in range(dims[i - 1]))
                for _ in range(dims[i])
            )
            if rq.rank(blk) == dims[i]:
                blocks.append(blk)
                break
    return StructureMatrix(dims, blocks)


def _random_partition(rng: random.Random, N: int, parts: int) -> tuple[int, ...]:
    cuts = sorted(rng.sample(range(1, N), parts - 1)) if parts > 1 else []
    sizes = [b - a for a, b in zip([0] + cuts, cuts + [N])]
    sizes.sort(reverse=True)
    return tuple(sizes)
