"""Truncated multivariate Taylor arithmetic (forward-mode jets).

Every variable is typed as base ('x') or fiber ('y'); a jet keeps all
monomial coefficients with total x-degree <= x_cap and total y-degree
<= y_cap and discards the rest.  Coefficients are stored in Taylor
normalization (raw partial divided by the multi-index factorial);
``Jet.partial`` converts back to raw partial derivatives.

Jets are immutable after construction and all operations are pure, so
evaluating many points concurrently needs no locking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

DEFAULT_X_CAP = 1
DEFAULT_Y_CAP = 5

# Base for the additive integer encoding of exponent tuples.  Exponent
# sums during multiplication stay below it, so encodings add without
# carries.
_ENC_BASE = 16

Scalar = "float | Jet"


class JetDomainError(ValueError):
    """Raised for sqrt/log of a non-positive jet, zero division, or
    non-finite coefficients."""


@dataclass(frozen=True)
class MultiIndex:
    """Exponent tuple of one monomial together with its typed degrees."""

    exponents: tuple[int, ...]
    x_degree: int
    y_degree: int

    @property
    def order(self) -> int:
        return self.x_degree + self.y_degree


def _bounded_exponents(kinds: tuple[str, ...], x_cap: int, y_cap: int):
    """All exponent tuples with typed total degrees within the caps."""

    def rec(slot: int, x_left: int, y_left: int, prefix: tuple[int, ...]):
        if slot == len(kinds):
            yield prefix
            return
        budget = x_left if kinds[slot] == "x" else y_left
        for e in range(budget + 1):
            if kinds[slot] == "x":
                yield from rec(slot + 1, x_left - e, y_left, prefix + (e,))
            else:
                yield from rec(slot + 1, x_left, y_left - e, prefix + (e,))

    return list(rec(0, x_cap, y_cap, ()))


class JetContext:
    """Shared tables for jets over a fixed variable layout.

    Holds the admissible multi-index basis, the pairwise product table
    (split into diagonal and strict upper-triangle parts so that
    multiplication is bitwise commutative) and per-variable derivative
    shift tables.
    """

    def __init__(self, kinds: tuple[str, ...], x_cap: int, y_cap: int):
        if not kinds or any(k not in ("x", "y") for k in kinds):
            raise ValueError(f"variable kinds must be 'x' or 'y', got {kinds!r}")
        if x_cap + y_cap >= _ENC_BASE // 2:
            raise ValueError("degree caps too large for the packed encoding")
        self.kinds = kinds
        self.x_cap = x_cap
        self.y_cap = y_cap
        self.nvars = len(kinds)
        self.max_order = x_cap + y_cap

        keys = _bounded_exponents(kinds, x_cap, y_cap)
        keys.sort(key=lambda e: (sum(e), e))
        self.keys: list[tuple[int, ...]] = keys
        self.size = len(keys)
        self._index = {k: i for i, k in enumerate(keys)}

        karr = np.array(keys, dtype=np.int64)
        x_slots = np.array([k == "x" for k in kinds])
        self._xdeg = karr[:, x_slots].sum(axis=1) if x_slots.any() else np.zeros(self.size, dtype=np.int64)
        self._ydeg = karr[:, ~x_slots].sum(axis=1) if (~x_slots).any() else np.zeros(self.size, dtype=np.int64)
        self._karr = karr

        powers = _ENC_BASE ** np.arange(self.nvars, dtype=np.int64)
        enc = karr @ powers
        order = np.argsort(enc)
        enc_sorted = enc[order]

        def locate(values: np.ndarray) -> np.ndarray:
            pos = np.searchsorted(enc_sorted, values)
            return order[pos]

        ii, jj = np.triu_indices(self.size)
        ok = (self._xdeg[ii] + self._xdeg[jj] <= x_cap) & (self._ydeg[ii] + self._ydeg[jj] <= y_cap)
        ii, jj = ii[ok], jj[ok]
        kk = locate(enc[ii] + enc[jj])
        diag = ii == jj
        self._mul_di = ii[diag]
        self._mul_dk = kk[diag]
        self._mul_oi = ii[~diag]
        self._mul_oj = jj[~diag]
        self._mul_ok = kk[~diag]

        self._deriv = []
        for v in range(self.nvars):
            has = karr[:, v] >= 1
            src = np.nonzero(has)[0]
            dst = locate(enc[src] - powers[v])
            fac = karr[src, v].astype(np.float64)
            self._deriv.append((src, dst, fac))

        fact = np.array([math.factorial(int(e)) for e in range(max(x_cap, y_cap) + 1)], dtype=np.float64)
        self._fact_prod = np.prod(fact[karr], axis=1)

        self._levels = [np.nonzero(self._xdeg + self._ydeg == d)[0] for d in range(self.max_order + 1)]

    def multi_index(self, exponents: Sequence[int]) -> MultiIndex:
        exps = tuple(int(e) for e in exponents)
        if len(exps) != self.nvars or any(e < 0 for e in exps):
            raise ValueError(f"bad exponent tuple {exponents!r} for {self.nvars} variables")
        xd = sum(e for e, k in zip(exps, self.kinds) if k == "x")
        yd = sum(e for e, k in zip(exps, self.kinds) if k == "y")
        if xd > self.x_cap or yd > self.y_cap:
            raise ValueError(f"exponents {exps} exceed degree caps ({self.x_cap}, {self.y_cap})")
        return MultiIndex(exps, xd, yd)

    def index_of(self, exponents: Sequence[int]) -> int:
        mi = exponents if isinstance(exponents, MultiIndex) else self.multi_index(exponents)
        return self._index[mi.exponents]

    def __repr__(self) -> str:
        return f"JetContext(nvars={self.nvars}, x_cap={self.x_cap}, y_cap={self.y_cap}, size={self.size})"


@lru_cache(maxsize=None)
def jet_context(kinds: tuple[str, ...], x_cap: int = DEFAULT_X_CAP, y_cap: int = DEFAULT_Y_CAP) -> JetContext:
    return JetContext(tuple(kinds), x_cap, y_cap)


class Jet:
    """One truncated Taylor expansion over a :class:`JetContext`."""

    __slots__ = ("ctx", "coef")

    def __init__(self, ctx: JetContext, coef: np.ndarray):
        self.ctx = ctx
        self.coef = coef

    # -- construction ------------------------------------------------

    @staticmethod
    def constant(ctx: JetContext, value: float) -> "Jet":
        coef = np.zeros(ctx.size)
        coef[0] = value
        return Jet(ctx, coef)

    @property
    def value(self) -> float:
        return float(self.coef[0])

    def coefficients(self) -> dict[MultiIndex, float]:
        """Nonzero Taylor coefficients keyed by multi-index."""
        out = {}
        for i in np.nonzero(self.coef)[0]:
            out[self.ctx.multi_index(self.ctx.keys[i])] = float(self.coef[i])
        return out

    # -- ring operations ---------------------------------------------

    def _check(self, other: "Jet") -> None:
        if other.ctx is not self.ctx:
            raise ValueError("jets belong to different contexts")

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return Jet(self.ctx, self.coef + other.coef)
        if isinstance(other, (int, float, np.floating)):
            coef = self.coef.copy()
            coef[0] += other
            return Jet(self.ctx, coef)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.ctx, -self.coef)

    def __sub__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return Jet(self.ctx, self.coef - other.coef)
        if isinstance(other, (int, float, np.floating)):
            coef = self.coef.copy()
            coef[0] -= other
            return Jet(self.ctx, coef)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            ctx = self.ctx
            a, b = self.coef, other.coef
            w_diag = a[ctx._mul_di] * b[ctx._mul_di]
            w_off = a[ctx._mul_oi] * b[ctx._mul_oj] + a[ctx._mul_oj] * b[ctx._mul_oi]
            out = np.bincount(ctx._mul_dk, weights=w_diag, minlength=ctx.size)
            out += np.bincount(ctx._mul_ok, weights=w_off, minlength=ctx.size)
            return Jet(ctx, out)
        if isinstance(other, (int, float, np.floating)):
            return Jet(self.ctx, self.coef * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating)):
            return Jet(self.ctx, self.coef / other)
        if isinstance(other, Jet):
            self._check(other)
            return _divide(self, other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, float, np.floating)):
            return _divide(Jet.constant(self.ctx, float(other)), self)
        return NotImplemented

    def __pow__(self, exponent):
        if isinstance(exponent, int):
            return pow_int(self, exponent)
        return NotImplemented

    # -- calculus ----------------------------------------------------

    def derivative(self, var: int) -> "Jet":
        """Jet of the partial derivative with respect to variable ``var``.

        The result lives in the same context; its coefficients are exact
        only up to one degree less in ``var``'s type than this jet's.
        """
        if not 0 <= var < self.ctx.nvars:
            raise ValueError(f"variable index {var} out of range")
        src, dst, fac = self.ctx._deriv[var]
        out = np.zeros(self.ctx.size)
        out[dst] = self.coef[src] * fac
        return Jet(self.ctx, out)

    def partial(self, exponents: Sequence[int]) -> float:
        """Raw partial derivative for the given exponent multi-index."""
        idx = self.ctx.index_of(exponents)
        return float(self.coef[idx] * self.ctx._fact_prod[idx])

    # -- analytic functions ------------------------------------------

    def sqrt(self) -> "Jet":
        if not self.value > 0.0:
            raise JetDomainError(f"sqrt of jet with non-positive value {self.value}")
        ctx = self.ctx
        out = np.zeros(ctx.size)
        out[0] = math.sqrt(self.value)
        root = Jet(ctx, out)
        for d in range(1, ctx.max_order + 1):
            conv = (root * root).coef
            idx = ctx._levels[d]
            out[idx] = (self.coef[idx] - conv[idx]) / (2.0 * out[0])
        _require_finite(out)
        return root

    def exp(self) -> "Jet":
        v = self.value
        e = math.exp(v)
        coeffs = [e / math.factorial(k) for k in range(self.ctx.max_order + 1)]
        return _compose(self, coeffs)

    def log(self) -> "Jet":
        v = self.value
        if not v > 0.0:
            raise JetDomainError(f"log of jet with non-positive value {v}")
        coeffs = [math.log(v)]
        for k in range(1, self.ctx.max_order + 1):
            coeffs.append((-1.0) ** (k + 1) / (k * v**k))
        return _compose(self, coeffs)

    def sin(self) -> "Jet":
        v = self.value
        cycle = (math.sin(v), math.cos(v), -math.sin(v), -math.cos(v))
        coeffs = [cycle[k % 4] / math.factorial(k) for k in range(self.ctx.max_order + 1)]
        return _compose(self, coeffs)

    def cos(self) -> "Jet":
        v = self.value
        cycle = (math.cos(v), -math.sin(v), -math.cos(v), math.sin(v))
        coeffs = [cycle[k % 4] / math.factorial(k) for k in range(self.ctx.max_order + 1)]
        return _compose(self, coeffs)

    def __repr__(self) -> str:
        nz = np.count_nonzero(self.coef)
        return f"Jet(value={self.value!r}, nonzero={nz}, ctx={self.ctx!r})"


def _require_finite(coef: np.ndarray) -> None:
    if not np.isfinite(coef).all():
        raise JetDomainError("jet operation produced non-finite coefficients")


def _divide(num: Jet, den: Jet) -> Jet:
    if den.value == 0.0:
        raise JetDomainError("division by jet with zero value")
    ctx = num.ctx
    out = np.zeros(ctx.size)
    out[0] = num.coef[0] / den.coef[0]
    quot = Jet(ctx, out)
    for d in range(1, ctx.max_order + 1):
        conv = (quot * den).coef
        idx = ctx._levels[d]
        out[idx] = (num.coef[idx] - conv[idx]) / den.coef[0]
    _require_finite(out)
    return quot


def _compose(a: Jet, coeffs: Sequence[float]) -> Jet:
    """Taylor composition phi(a) from the 1-D coefficients of phi about a.value."""
    ctx = a.ctx
    shifted = a.coef.copy()
    shifted[0] = 0.0
    u = Jet(ctx, shifted)
    acc = Jet.constant(ctx, coeffs[-1])
    for c in reversed(coeffs[:-1]):
        acc = acc * u + c
    _require_finite(acc.coef)
    return acc


def lift_variable(ctx: JetContext, index: int, value: float) -> Jet:
    """Seed variable ``index`` at ``value``: unit first-order coefficient."""
    if not 0 <= index < ctx.nvars:
        raise ValueError(f"variable index {index} out of range for {ctx.nvars} variables")
    coef = np.zeros(ctx.size)
    coef[0] = value
    unit = tuple(1 if v == index else 0 for v in range(ctx.nvars))
    coef[ctx.index_of(unit)] = 1.0
    return Jet(ctx, coef)


def constant(ctx: JetContext, value: float) -> Jet:
    return Jet.constant(ctx, value)


def extract_partial(jet: Jet, exponents: Sequence[int]) -> float:
    return jet.partial(exponents)


# -- scalar-generic helpers (work on floats and jets alike) -----------


def pow_int(u, k: int):
    """Integer power by repeated squaring; negative k via reciprocal."""
    if k == 0:
        return u * 0.0 + 1.0
    n = -k if k < 0 else k
    acc = None
    base = u
    while n:
        if n & 1:
            acc = base if acc is None else acc * base
        n >>= 1
        if n:
            base = base * base
    return 1.0 / acc if k < 0 else acc


def sqrt(u):
    return u.sqrt() if isinstance(u, Jet) else math.sqrt(u)


def exp(u):
    return u.exp() if isinstance(u, Jet) else math.exp(u)


def ln(u):
    return u.log() if isinstance(u, Jet) else math.log(u)


def sin(u):
    return u.sin() if isinstance(u, Jet) else math.sin(u)


def cos(u):
    return u.cos() if isinstance(u, Jet) else math.cos(u)
