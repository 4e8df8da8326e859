"""Metric families exposing F^2 over generic scalars, with validity checks.

Each family is declared in its own chart with coordinates x1..xd and
fiber variables y1..yd.  ``f_squared`` accepts floats or jets for both
arguments, so the same declaration drives plain evaluation, finite
differences and jet differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr, jets

SLIT_MIN_NORM = 1e-6


class MetricDefinitionError(ValueError):
    """Malformed metric declaration (dimensions, symmetry, norms)."""


def x_names(dim: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(dim))


def y_names(dim: int) -> tuple[str, ...]:
    return tuple(f"y{i + 1}" for i in range(dim))


def _as_ast(entry, allowed: Sequence[str]) -> expr.ExprAst:
    if isinstance(entry, str):
        return expr.parse(entry, allowed)
    return entry


def _x_bindings(dim: int, x: Sequence) -> dict:
    return {f"x{i + 1}": x[i] for i in range(dim)}


@dataclass(frozen=True)
class EuclideanMetric:
    dim: int

    def f_squared(self, x: Sequence, y: Sequence):
        total = y[0] * y[0]
        for a in range(1, self.dim):
            total = total + y[a] * y[a]
        return total


@dataclass(frozen=True)
class RiemannianMetric:
    """F^2 = a_ij(x) y^i y^j; only the upper triangle of ``a`` is stored."""

    dim: int
    a: tuple[tuple[expr.ExprAst, ...], ...]

    def coeff_matrix(self, x: Sequence):
        bind = _x_bindings(self.dim, x)
        mat = [[None] * self.dim for _ in range(self.dim)]
        for i in range(self.dim):
            for j in range(i, self.dim):
                val = expr.evaluate(self.a[i][j - i], bind)
                mat[i][j] = val
                mat[j][i] = val
        return mat

    def f_squared(self, x: Sequence, y: Sequence):
        mat = self.coeff_matrix(x)
        total = None
        for i in range(self.dim):
            for j in range(self.dim):
                term = mat[i][j] * y[i] * y[j]
                total = term if total is None else total + term
        return total


@dataclass(frozen=True)
class RandersMetric:
    """F = alpha + beta with alpha the a-norm and beta = b_i(x) y^i."""

    dim: int
    a: tuple[tuple[expr.ExprAst, ...], ...]
    b: tuple[expr.ExprAst, ...]

    def _riemann(self) -> RiemannianMetric:
        return RiemannianMetric(self.dim, self.a)

    def f_squared(self, x: Sequence, y: Sequence):
        alpha2 = self._riemann().f_squared(x, y)
        bind = _x_bindings(self.dim, x)
        beta = None
        for i in range(self.dim):
            term = expr.evaluate(self.b[i], bind) * y[i]
            beta = term if beta is None else beta + term
        f = jets.sqrt(alpha2) + beta
        return f * f

    def b_norm_squared(self, x: Sequence[float]) -> float:
        """||b||_a^2 at a real base point; must stay below 1."""
        amat = np.array(self._riemann().coeff_matrix(x), dtype=float)
        bvec = np.array([expr.evaluate(e, _x_bindings(self.dim, x)) for e in self.b], dtype=float)
        return float(bvec @ np.linalg.solve(amat, bvec))


@dataclass(frozen=True)
class CustomMetric:
    """F^2 given directly as an expression over x1..xd and y1..yd."""

    dim: int
    expression: expr.ExprAst

    def f_squared(self, x: Sequence, y: Sequence):
        bind = _x_bindings(self.dim, x)
        bind.update({f"y{i + 1}": y[i] for i in range(self.dim)})
        return expr.evaluate(self.expression, bind)


MetricSpec = EuclideanMetric | RiemannianMetric | RandersMetric | CustomMetric


def euclidean_metric(dim: int) -> EuclideanMetric:
    if dim < 1:
        raise MetricDefinitionError("dimension must be positive")
    return EuclideanMetric(dim)


def _parse_matrix(dim: int, rows, allowed: Sequence[str]) -> tuple[tuple[expr.ExprAst, ...], ...]:
    if len(rows) != dim or any(len(r) != dim for r in rows):
        raise MetricDefinitionError(f"coefficient matrix must be {dim}x{dim}")
    parsed = [[_as_ast(e, allowed) for e in row] for row in rows]
    # store the upper triangle; the declaration is symmetric by construction
    return tuple(tuple(parsed[i][j] for j in range(i, dim)) for i in range(dim))


def riemannian_metric(dim: int, a) -> RiemannianMetric:
    return RiemannianMetric(dim, _parse_matrix(dim, a, x_names(dim)))


def randers_metric(dim: int, a, b) -> RandersMetric:
    if len(b) != dim:
        raise MetricDefinitionError(f"one-form must have {dim} entries")
    allowed = x_names(dim)
    return RandersMetric(dim, _parse_matrix(dim, a, allowed), tuple(_as_ast(e, allowed) for e in b))


def custom_metric(dim: int, f_squared) -> CustomMetric:
    return CustomMetric(dim, _as_ast(f_squared, x_names(dim) + y_names(dim)))


def f_squared(spec, x: Sequence, y: Sequence):
    return spec.f_squared(x, y)


@dataclass
class TangentPoint:
    """A base point with a nonzero fiber vector, optionally block-split."""

    x: np.ndarray
    y: np.ndarray
    split: int | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape:
            raise MetricDefinitionError("x and y must have equal length")

    @property
    def y1(self) -> np.ndarray:
        return self.y[: self.split]

    @property
    def y2(self) -> np.ndarray:
        return self.y[self.split :]

    def slit_ok(self, min_norm: float = SLIT_MIN_NORM) -> bool:
        if self.split is None:
            return float(np.linalg.norm(self.y)) >= min_norm
        return (
            float(np.linalg.norm(self.y1)) >= min_norm
            and float(np.linalg.norm(self.y2)) >= min_norm
        )


def fiber_hessian(spec, x: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """Hessian of F^2/2 in the fiber variables, via jets."""
    dim = spec.dim
    ctx = jets.jet_context(("y",) * dim, 0, 2)
    yj = [jets.lift_variable(ctx, a, float(y[a])) for a in range(dim)]
    half = spec.f_squared([float(v) for v in x], yj) * 0.5
    hess = np.empty((dim, dim))
    for a in range(dim):
        for b in range(a, dim):
            e = [0] * dim
            e[a] += 1
            e[b] += 1
            hess[a, b] = hess[b, a] = half.partial(e)
    return hess


@dataclass
class ConvexityCheck:
    point: TangentPoint
    passed: bool
    min_eigenvalue: float | None
    minors: tuple[float, ...]
    error: str | None = None


@dataclass
class ConvexityReport:
    checks: list[ConvexityCheck] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


def validate_strong_convexity(spec, samples: Sequence[TangentPoint], tol: float = 1e-10) -> ConvexityReport:
    """Positive definiteness of the fiber Hessian at each sample.

    Leading principal minors decide pass/fail; the smallest eigenvalue is
    reported as a conditioning proxy.  Evaluation failures are recorded
    per point instead of aborting the run.
    """
    report = ConvexityReport()
    for pt in samples:
        if not pt.slit_ok():
            report.checks.append(ConvexityCheck(pt, False, None, (), error="fiber vector below slit threshold"))
            continue
        try:
            if isinstance(spec, RandersMetric) and spec.b_norm_squared(pt.x) >= 1.0:
                report.checks.append(ConvexityCheck(pt, False, None, (), error="one-form norm >= 1"))
                continue
            hess = fiber_hessian(spec, pt.x, pt.y)
        except (expr.ExprError, jets.JetDomainError) as exc:
            report.checks.append(ConvexityCheck(pt, False, None, (), error=str(exc)))
            continue
        minors = tuple(float(np.linalg.det(hess[: k + 1, : k + 1])) for k in range(spec.dim))
        passed = all(m > tol for m in minors)
        min_eig = float(np.linalg.eigvalsh(hess)[0])
        report.checks.append(ConvexityCheck(pt, passed, min_eig, minors))
    return report


def homogeneity_check(spec, sample: TangentPoint, lambdas: Sequence[float]) -> float:
    """max over lambda of |F(x, lam*y) - lam*F(x, y)| / (lam*F(x, y))."""
    x = [float(v) for v in sample.x]
    base = np.sqrt(spec.f_squared(x, [float(v) for v in sample.y]))
    worst = 0.0
    for lam in lambdas:
        if lam <= 0:
            raise ValueError("homogeneity only holds for positive scalings")
        scaled = np.sqrt(spec.f_squared(x, [float(lam * v) for v in sample.y]))
        worst = max(worst, abs(scaled - lam * base) / (lam * base))
    return worst
