"""Box-constrained quadratic program for the motion duration.

    minimize   J(d) = alpha (d - d_desired)^2 + beta (d - d_prev)^2
    subject to d_min <= d <= d_max

The solver is an active-set projected Newton iteration. Multipliers come
from stationarity of the Lagrangian
``L = J + lam_lo (d_min - d) + lam_hi (d - d_max)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 50


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class QpParams:
    alpha: float
    beta: float
    d_desired: float
    d_prev: float
    d_min: float
    d_max: float

    def __post_init__(self):
        values = (self.alpha, self.beta, self.d_desired, self.d_prev, self.d_min, self.d_max)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"QP parameters must be finite: {self}")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"weights must be positive, got alpha={self.alpha}, beta={self.beta}")
        if not self.d_min < self.d_max:
            raise ValueError(f"need d_min < d_max, got [{self.d_min}, {self.d_max}]")


@dataclass(frozen=True)
class DurationSolution:
    d_star: float
    lambda_lo: float
    lambda_hi: float
    iterations: int
    kkt_residual: float

    def to_dict(self) -> dict:
        return {
            "d_star": self.d_star,
            "lambda_lo": self.lambda_lo,
            "lambda_hi": self.lambda_hi,
            "iterations": self.iterations,
            "kkt_residual": self.kkt_residual,
        }


def cost(d: float, p: QpParams) -> float:
    return p.alpha * (d - p.d_desired) ** 2 + p.beta * (d - p.d_prev) ** 2


def gradient(d: float, p: QpParams) -> float:
    return 2 * p.alpha * (d - p.d_desired) + 2 * p.beta * (d - p.d_prev)


def hessian(p: QpParams) -> float:
    return 2 * p.alpha + 2 * p.beta


def closed_form(p: QpParams) -> float:
    """Analytic minimizer; kept independent of :func:`solve_sqp` for cross-checks."""
    unconstrained = (p.alpha * p.d_desired + p.beta * p.d_prev) / (p.alpha + p.beta)
    return min(max(unconstrained, p.d_min), p.d_max)


def kkt_residual(d: float, lam_lo: float, lam_hi: float, p: QpParams) -> float:
    """Largest violation of stationarity, feasibility, complementarity and dual sign."""
    return max(
        abs(gradient(d, p) - lam_lo + lam_hi),
        max(p.d_min - d, 0.0),
        max(d - p.d_max, 0.0),
        abs(lam_lo * (p.d_min - d)),
        abs(lam_hi * (d - p.d_max)),
        max(-lam_lo, 0.0),
        max(-lam_hi, 0.0),
    )


def _multipliers(d: float, p: QpParams) -> tuple[float, float]:
    if d == p.d_min:
        return gradient(d, p), 0.0
    if d == p.d_max:
        return 0.0, -gradient(d, p)
    return 0.0, 0.0


def _certify(d: float, p: QpParams, iterations: int) -> DurationSolution:
    lam_lo, lam_hi = _multipliers(d, p)
    # rounding can leave a multiplier a hair below zero when the optimum sits on a bound
    lam_lo, lam_hi = max(lam_lo, 0.0), max(lam_hi, 0.0)
    return DurationSolution(d, lam_lo, lam_hi, iterations, kkt_residual(d, lam_lo, lam_hi, p))


def solve_sqp(p: QpParams, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> DurationSolution:
    """Minimize the duration cost over the box ``[d_min, d_max]``.

    Each iteration fixes the bounds whose gradient pushes outward (the active
    set), takes a Newton step on the free variable and projects it back onto
    the box. The loop ends when a bound is active with the gradient pointing
    outward, or when a step moves ``d`` by at most ``tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    h = hessian(p)
    d = min(max(p.d_prev, p.d_min), p.d_max)

    for it in range(max_iter):
        g = gradient(d, p)
        if (d <= p.d_min and g > 0) or (d >= p.d_max and g < 0):
            return _certify(d, p, it)
        d_new = min(max(d - g / h, p.d_min), p.d_max)
        moved = abs(d_new - d)
        d = d_new
        if moved <= tol:
            return _certify(d, p, it + 1)

    raise ConvergenceError(f"no convergence in {max_iter} iterations for {p}")
