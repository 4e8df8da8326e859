"""Direct-computation curvature oracle.

Every quantity is obtained from F^2 alone by jet differentiation:
the fundamental tensor as the fiber Hessian, its inverse by Gaussian
elimination in jet arithmetic, the geodesic spray from first base
derivatives, and the Berwald/Landsberg family from third fiber
derivatives of the spray.  No closed-form block formula enters here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .jets import Jet, JetContext
from .metrics import TangentPoint

PIVOT_TOL = 1e-8


class DegeneratePointError(RuntimeError):
    """Fiber Hessian numerically singular; point lies outside the
    strong-convexity domain."""

    def __init__(self, min_pivot: float):
        super().__init__(f"fiber Hessian degenerate (pivot {min_pivot:.3e})")
        self.min_pivot = min_pivot


def jet_matrix_inverse(mat: list[list[Jet]], ctx: JetContext, pivot_tol: float = PIVOT_TOL) -> list[list[Jet]]:
    """Invert a matrix of jets by Gauss-Jordan elimination.

    Partial pivoting uses the value coefficients; a pivot below
    ``pivot_tol`` raises :class:`DegeneratePointError`.
    """
    n = len(mat)
    aug = [list(row) + [jets.constant(ctx, 1.0 if i == j else 0.0) for j in range(n)] for i, row in enumerate(mat)]
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(aug[r][col].value))
        pivot = abs(aug[pivot_row][col].value)
        if pivot < pivot_tol:
            raise DegeneratePointError(pivot)
        if pivot_row != col:
            aug[col], aug[pivot_row] = aug[pivot_row], aug[col]
        inv_pivot = 1.0 / aug[col][col]
        aug[col] = [entry * inv_pivot for entry in aug[col]]
        for row in range(n):
            if row == col:
                continue
            factor = aug[row][col]
            if not np.any(factor.coef):
                continue
            aug[row] = [aug[row][k] - factor * aug[col][k] for k in range(2 * n)]
    return [row[n:] for row in aug]


class MetricJets:
    """Jet workspace for one metric at one tangent point.

    Seeds all base and fiber coordinates as jet variables (base degree
    <= x_cap, fiber degree <= y_cap), evaluates F^2 once and derives
    every curvature tensor from that single expansion.  Intermediate jet
    matrices are cached; instances are cheap to discard.
    """

    def __init__(self, metric, point: TangentPoint, x_cap: int = jets.DEFAULT_X_CAP, y_cap: int = jets.DEFAULT_Y_CAP):
        self.metric = metric
        self.dim = metric.dim
        d = self.dim
        self.point = point
        self.ctx = jets.jet_context(("x",) * d + ("y",) * d, x_cap, y_cap)
        self.xj = [jets.lift_variable(self.ctx, a, float(point.x[a])) for a in range(d)]
        self.yj = [jets.lift_variable(self.ctx, d + a, float(point.y[a])) for a in range(d)]
        self.F2 = metric.f_squared(self.xj, self.yj)
        self._cache: dict[str, object] = {}

    # -- indexing helpers ---------------------------------------------

    def _yexp(self, *indices: int) -> list[int]:
        e = [0] * (2 * self.dim)
        for a in indices:
            e[self.dim + a] += 1
        return e

    def _dy(self, jet: Jet, a: int) -> Jet:
        return jet.derivative(self.dim + a)

    def _cached(self, name: str, build):
        if name not in self._cache:
            self._cache[name] = build()
        return self._cache[name]

    # -- fundamental tensor -------------------------------------------

    @property
    def f2_value(self) -> float:
        return self.F2.value

    @property
    def g_jets(self) -> list[list[Jet]]:
        def build():
            d = self.dim
            half = self.F2 * 0.5
            rows = [[None] * d for _ in range(d)]
            for a in range(d):
                da = self._dy(half, a)
                for b in range(a, d):
                    rows[a][b] = rows[b][a] = self._dy(da, b)
            return rows

        return self._cached("g_jets", build)

    @property
    def g(self) -> np.ndarray:
        return self._cached("g", lambda: np.array([[e.value for e in row] for row in self.g_jets]))

    @property
    def g_inv_jets(self) -> list[list[Jet]]:
        return self._cached("g_inv_jets", lambda: jet_matrix_inverse(self.g_jets, self.ctx))

    @property
    def g_inv(self) -> np.ndarray:
        return self._cached("g_inv", lambda: np.array([[e.value for e in row] for row in self.g_inv_jets]))

    @property
    def y_lower(self) -> np.ndarray:
        return self._cached("y_lower", lambda: self.g @ np.asarray(self.point.y, dtype=float))

    # -- Cartan family -------------------------------------------------

    @property
    def cartan(self) -> np.ndarray:
        def build():
            d = self.dim
            C = np.empty((d, d, d))
            for a in range(d):
                for b in range(a, d):
                    for c in range(b, d):
                        val = 0.25 * self.F2.partial(self._yexp(a, b, c))
                        C[a, b, c] = C[a, c, b] = C[b, a, c] = C[b, c, a] = C[c, a, b] = C[c, b, a] = val
            return C

        return self._cached("cartan", build)

    @property
    def cartan_jets(self) -> list[list[list[Jet]]]:
        def build():
            d = self.dim
            out = [[[None] * d for _ in range(d)] for _ in range(d)]
            for a in range(d):
                for b in range(a, d):
                    base = self.g_jets[a][b]
                    for c in range(d):
                        out[a][b][c] = out[b][a][c] = self._dy(base, c) * 0.5
            return out

        return self._cached("cartan_jets", build)

    def cartan_raised_pair(self, orders: int = 0) -> np.ndarray:
        """-1/2 vertical partials of the inverse metric.

        orders=0 gives C^{lp}_k, orders=1 its first vertical partial
        C^{lp}_{k;j}, orders=2 the second C^{lp}_{k;j;i}.
        """
        name = f"cup2_{orders}"

        def build():
            d = self.dim
            shape = (d, d) + (d,) * (orders + 1)
            out = np.empty(shape)
            for l in range(d):
                for p in range(l, d):
                    jet = self.g_inv_jets[l][p]
                    for idx in np.ndindex(*(d,) * (orders + 1)):
                        out[(l, p) + idx] = -0.5 * jet.partial(self._yexp(*idx))
                    out[p, l] = out[l, p]
            return out

        return self._cached(name, build)

    @property
    def cartan_raised_one_jets(self) -> list[list[list[Jet]]]:
        def build():
            d = self.dim
            C = self.cartan_jets
            ginv = self.g_inv_jets
            out = [[[None] * d for _ in range(d)] for _ in range(d)]
            for p in range(d):
                for a in range(d):
                    for b in range(a, d):
                        total = ginv[p][0] * C[0][a][b]
                        for q in range(1, d):
                            total = total + ginv[p][q] * C[q][a][b]
                        out[p][a][b] = out[p][b][a] = total
            return out

        return self._cached("cartan_raised_one_jets", build)

    @property
    def cartan_raised_one(self) -> np.ndarray:
        """C^p_{ab} = g^{pq} C_{qab}."""
        return self._cached(
            "cartan_raised_one",
            lambda: np.einsum("pq,qab->pab", self.g_inv, self.cartan),
        )

    @property
    def cartan_raised_one_vertical(self) -> np.ndarray:
        """C^p_{ab;c}: vertical partial of the raised tensor."""

        def build():
            d = self.dim
            out = np.empty((d, d, d, d))
            jets_ = self.cartan_raised_one_jets
            for p in range(d):
                for a in range(d):
                    for b in range(a, d):
                        for c in range(d):
                            val = jets_[p][a][b].partial(self._yexp(c))
                            out[p, a, b, c] = out[p, b, a, c] = val
            return out

        return self._cached("cartan_raised_one_vertical", build)

    @property
    def mean_cartan(self) -> np.ndarray:
        return self._cached("mean_cartan", lambda: np.einsum("abc,bc->a", self.cartan, self.g_inv))

    @property
    def mean_cartan_raised_jets(self) -> list[Jet]:
        def build():
            d = self.dim
            C = self.cartan_jets
            ginv = self.g_inv_jets
            lowered = []
            for q in range(d):
                total = None
                for a in range(d):
                    for b in range(d):
                        term = C[q][a][b] * ginv[a][b]
                        total = term if total is None else total + term
                lowered.append(total)
            raised = []
            for p in range(d):
                total = ginv[p][0] * lowered[0]
                for q in range(1, d):
                    total = total + ginv[p][q] * lowered[q]
                raised.append(total)
            return raised

        return self._cached("mean_cartan_raised_jets", build)

    @property
    def mean_cartan_raised(self) -> np.ndarray:
        return self._cached("mean_cartan_raised", lambda: self.g_inv @ self.mean_cartan)

    @property
    def mean_cartan_raised_vertical(self) -> np.ndarray:
        """(I^p)_{;i}: vertical partial of the raised mean Cartan vector."""

        def build():
            d = self.dim
            out = np.empty((d, d))
            for p in range(d):
                for i in range(d):
                    out[p, i] = self.mean_cartan_raised_jets[p].partial(self._yexp(i))
            return out

        return self._cached("mean_cartan_raised_vertical", build)

    # -- spray and Berwald family ---------------------------------------

    @property
    def spray_jets(self) -> list[Jet]:
        def build():
            d = self.dim
            fx = [self.F2.derivative(p) for p in range(d)]
            ginv = self.g_inv_jets
            quarter = []
            for p in range(d):
                total = fx[0].derivative(d + p) * self.yj[0]
                for q in range(1, d):
                    total = total + fx[q].derivative(d + p) * self.yj[q]
                quarter.append(total - fx[p])
            out = []
            for i in range(d):
                total = ginv[i][0] * quarter[0]
                for p in range(1, d):
                    total = total + ginv[i][p] * quarter[p]
                out.append(total * 0.25)
            return out

        return self._cached("spray_jets", build)

    @property
    def spray(self) -> np.ndarray:
        return self._cached("spray", lambda: np.array([s.value for s in self.spray_jets]))

    @property
    def berwald(self) -> np.ndarray:
        def build():
            d = self.dim
            B = np.empty((d, d, d, d))
            for l in range(d):
                sj = self.spray_jets[l]
                for i in range(d):
                    for j in range(i, d):
                        for k in range(j, d):
                            val = sj.partial(self._yexp(i, j, k))
                            B[l, i, j, k] = B[l, i, k, j] = B[l, j, i, k] = val
                            B[l, j, k, i] = B[l, k, i, j] = B[l, k, j, i] = val
            return B

        return self._cached("berwald", build)

    @property
    def landsberg(self) -> np.ndarray:
        return self._cached("landsberg", lambda: -0.5 * np.einsum("l,lijk->ijk", self.y_lower, self.berwald))

    @property
    def mean_landsberg(self) -> np.ndarray:
        return self._cached("mean_landsberg", lambda: np.einsum("ijk,jk->i", self.landsberg, self.g_inv))

    def bundle(self) -> "CurvatureBundle":
        return CurvatureBundle(
            g=self.g,
            g_inv=self.g_inv,
            y_lower=self.y_lower,
            spray=self.spray,
            cartan=self.cartan,
            cartan_raised=self.cartan_raised_pair(0),
            mean_cartan=self.mean_cartan,
            berwald=self.berwald,
            landsberg=self.landsberg,
            mean_landsberg=self.mean_landsberg,
            f_squared=self.f2_value,
        )


@dataclass(frozen=True)
class CurvatureBundle:
    """All curvature tensors of one metric at one tangent point."""

    g: np.ndarray
    g_inv: np.ndarray
    y_lower: np.ndarray
    spray: np.ndarray
    cartan: np.ndarray
    cartan_raised: np.ndarray
    mean_cartan: np.ndarray
    berwald: np.ndarray
    landsberg: np.ndarray
    mean_landsberg: np.ndarray
    f_squared: float


def curvature_bundle(metric, point: TangentPoint) -> CurvatureBundle:
    return MetricJets(metric, point).bundle()


def fundamental_tensor(metric, point: TangentPoint) -> tuple[np.ndarray, np.ndarray]:
    mj = MetricJets(metric, point)
    return mj.g, mj.g_inv


def spray(metric, point: TangentPoint) -> np.ndarray:
    return MetricJets(metric, point).spray


def cartan(metric, point: TangentPoint) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mj = MetricJets(metric, point)
    return mj.cartan, mj.cartan_raised_pair(0), mj.mean_cartan


def berwald(metric, point: TangentPoint) -> np.ndarray:
    return MetricJets(metric, point).berwald


def landsberg(metric, point: TangentPoint) -> tuple[np.ndarray, np.ndarray]:
    mj = MetricJets(metric, point)
    return mj.landsberg, mj.mean_landsberg
