"""Central finite differences with one level of Richardson extrapolation.

Independent derivative oracle used to audit the jet engine; evaluates
the target as a plain float function and never touches jet arithmetic.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

Func = Callable[[np.ndarray], float]


def central_diff(func: Func, point: np.ndarray, var: int, h: float, richardson: bool = True) -> float:
    """First partial of ``func`` at ``point`` with respect to ``var``."""

    def stencil(step: float) -> float:
        hi = np.array(point, dtype=float)
        lo = np.array(point, dtype=float)
        hi[var] += step
        lo[var] -= step
        return (func(hi) - func(lo)) / (2.0 * step)

    if not richardson:
        return stencil(h)
    d1 = stencil(h)
    d2 = stencil(h / 2.0)
    return (4.0 * d2 - d1) / 3.0


def fd_partial(func: Func, point: np.ndarray, vars: Sequence[int], h: float = 1e-2, richardson: bool = True) -> float:
    """Mixed partial via iterated central differences, one variable at a time."""
    if not vars:
        return func(np.array(point, dtype=float))
    first, rest = vars[0], vars[1:]

    def reduced(p: np.ndarray) -> float:
        return fd_partial(func, p, rest, h=h, richardson=richardson)

    return central_diff(reduced, point, first, h, richardson=richardson)
