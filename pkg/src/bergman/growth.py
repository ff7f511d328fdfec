"""Growth of the coefficient family and the truncation calculus.

Three independent probes of how fast the coefficients can grow:

* :func:`fit_growth` fits ``log b_m = m log C + w log m!`` (w = 2 for the
  proved factorial-squared model, w = 1 for the conjectured one) to computed
  grid norms and reports whether the fitted bound covers them,
* :func:`worst_case_norm_table` runs the equality case of the recursive
  norm inequality with unit constant in exact big-integer arithmetic, which
  is where the factorial-squared floor comes from,
* :func:`truncation_minimizer` and :func:`exp_factorial_bound_check` verify
  the two elementary facts behind the optimal truncation order: the scan of
  ``C^m (m!)^2 / k^m`` is unimodal with minimum near sqrt(k/C), and
  ``k e^{-k delta} <= (2/delta)^{N+2} (N+1)! / k^{N+1}``.

Verdict sweeps run in log domain; the worst case table never leaves exact
rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import lgamma
from typing import Iterable, Sequence

import numpy as np

from .coefficients import NormTable
from .series import exponents_of_degree, multi_factorial


@dataclass(frozen=True)
class GrowthFit:
    orders: tuple
    norms: tuple
    model: str               # "m_factorial_sq" or "m_factorial"
    fitted_C: float | None   # least-squares constant, feeds the N0(k) default
    cover_C: float | None    # smallest C whose bound covers every norm
    prefix_cover_C: float | None  # covering constant of the first half of orders
    residuals: tuple         # log-domain residuals against the fitted bound
    slack: float
    verdict: str             # "pass" | "fail" | "vanishing" | "vanishing_beyond_<n>"
    radius: float
    grid: int

    def to_dict(self) -> dict:
        return {
            "orders": list(self.orders),
            "norms": list(self.norms),
            "model": self.model,
            "fitted_C": self.fitted_C,
            "cover_C": self.cover_C,
            "prefix_cover_C": self.prefix_cover_C,
            "residuals": list(self.residuals),
            "slack": self.slack,
            "verdict": self.verdict,
            "radius": self.radius,
            "grid": self.grid,
        }


_MODEL_WEIGHTS = {"m_factorial_sq": 2, "m_factorial": 1}


def fit_growth(norms: NormTable, model: str = "m_factorial_sq", slack: float = 0.05) -> GrowthFit:
    """Fit the growth model to the order norms b_{m,0}, m >= 1.

    All-zero families report "vanishing"; families positive on a prefix and
    zero beyond report "vanishing_beyond_<last positive order>".  Otherwise
    at least three positive orders are required.

    The model asserts an upper bound, so the verdict checks that the bound
    covers with a stable constant: cover_C is the smallest constant whose
    bound ``C^m (m!)^w`` dominates every computed norm, and the verdict is
    PASS when the later orders do not push it more than ``slack`` above the
    covering constant of the first half.  Norms growing slower than the
    model therefore pass (they sit under the bound); norms growing faster
    keep raising the covering constant to the last computed order and fail.
    The least-squares constant is reported alongside; it is the default
    calibration for the optimal truncation order, not the verdict.
    """
    if model not in _MODEL_WEIGHTS:
        raise ValueError(f"unknown growth model {model!r}")
    w = _MODEL_WEIGHTS[model]
    values = norms.order_norms()
    orders = tuple(range(1, norms.M + 1))
    tail = tuple(values[1:])
    base = dict(
        orders=orders, norms=tail, model=model, fitted_C=None, cover_C=None,
        prefix_cover_C=None, residuals=(), slack=slack,
        radius=norms.radius, grid=norms.grid,
    )
    positive = [(m, values[m]) for m in orders if values[m] > 0]
    if not positive:
        return GrowthFit(verdict="vanishing", **base)
    last_positive = max(m for m, _ in positive)
    if len(positive) == last_positive and last_positive < norms.M:
        return GrowthFit(verdict=f"vanishing_beyond_{last_positive}", **base)
    if len(positive) < 3:
        raise ValueError("need at least three positive orders to fit growth")
    num = sum(m * (math.log(v) - w * lgamma(m + 1)) for m, v in positive)
    den = sum(m * m for m, _ in positive)
    log_c = num / den
    residuals = tuple(
        math.log(v) - (m * log_c + w * lgamma(m + 1)) for m, v in positive
    )
    per_order = [
        (math.log(v) - w * lgamma(m + 1)) / m for m, v in positive
    ]
    split = max(2, (len(per_order) + 1) // 2)
    cover = math.exp(max(per_order))
    prefix_cover = math.exp(max(per_order[:split]))
    verdict = "pass" if cover <= prefix_cover * (1.0 + slack) else "fail"
    base["fitted_C"] = math.exp(log_c)
    base["cover_C"] = cover
    base["prefix_cover_C"] = prefix_cover
    base["residuals"] = residuals
    return GrowthFit(verdict=verdict, **base)


# -- worst case equality recursion -------------------------------------------


def _sub_indices(delta):
    """All componentwise alpha <= delta, deterministic order."""
    if not delta:
        yield ()
        return
    for head in range(delta[0] + 1):
        for tail in _sub_indices(delta[1:]):
            yield (head,) + tail


def worst_case_norm_table(n: int, M: int, Kmax: int) -> dict:
    """Equality case of the norm recursion with unit constant, exactly.

    Returns the entries {(m, k): value} for 0 <= m <= M and xi = k e_1,
    k <= Kmax, computed from the initial data b_{0,xi} = [xi == 0] by the
    five-fold recursive sum.  Values are exact Fractions (integers except
    for the factorial normalizations that always cancel back out).
    """
    if n < 1 or M < 0 or Kmax < 0:
        raise ValueError("need n >= 1, M >= 0, Kmax >= 0")
    if n > 2 or M > 6 or Kmax > 8:
        raise ValueError(
            "resource guard: the worst case table is combinatorial, "
            "keep n <= 2, M <= 6, Kmax <= 8"
        )
    memo: dict = {}
    zero = (0,) * n

    def value(m: int, xi) -> Fraction:
        if m == 0:
            return Fraction(1) if xi == zero else Fraction(0)
        key = (m, xi)
        hit = memo.get(key)
        if hit is not None:
            return hit
        xi_fact = multi_factorial(xi)
        total = Fraction(0)
        for l in range(1, m + 1):
            for delta in exponents_of_degree(n, l):
                delta_fact = multi_factorial(delta)
                inner = Fraction(0)
                for alpha in _sub_indices(delta):
                    for beta in _sub_indices(delta):
                        gmax = sum(alpha) + sum(beta)
                        for gdeg in range(gmax + 1):
                            for gamma in exponents_of_degree(n, gdeg):
                                bin_a = _ones_binomial(alpha, gdeg)
                                bin_b = _ones_binomial(beta, gdeg)
                                gfact = multi_factorial(gamma)
                                for xi0 in _sub_indices(xi):
                                    prev = value(
                                        m - l,
                                        tuple(g + x for g, x in zip(gamma, xi0)),
                                    )
                                    if prev == 0:
                                        continue
                                    inner += (
                                        prev
                                        * Fraction(xi_fact, multi_factorial(xi0) * gfact)
                                        * bin_a
                                        * bin_b
                                    )
                total += delta_fact * inner
        memo[key] = total
        return total

    out = {}
    for m in range(M + 1):
        for k in range(Kmax + 1):
            xi = (k,) + (0,) * (n - 1)
            out[(m, k)] = value(m, xi)
    return out


def _ones_binomial(alpha, g: int) -> int:
    """binom(alpha + g*ones, g*ones), componentwise product."""
    out = 1
    for a in alpha:
        out *= math.comb(a + g, g)
    return out


# -- truncation rules ---------------------------------------------------------


@dataclass(frozen=True)
class TruncationScan:
    C: float
    k: int
    argmin: int
    min_value: float
    sqrt_target: float
    unimodal: bool
    within_one_of_target: bool
    stirling_bound_ok: bool

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "k": self.k,
            "argmin": self.argmin,
            "min_value": self.min_value,
            "sqrt_target": self.sqrt_target,
            "unimodal": self.unimodal,
            "within_one_of_target": self.within_one_of_target,
            "stirling_bound_ok": self.stirling_bound_ok,
        }


def truncation_minimizer(C: float, k: int) -> TruncationScan:
    """Scan m -> C^m (m!)^2 / k^m over 1..k in log domain.

    Asserts the scan is unimodal, the argmin sits within one of sqrt(k/C),
    and the minimum obeys the Stirling bound e^2 m e^{-2m} at
    m = floor(sqrt(k/C)).
    """
    if C <= 0 or k < 1:
        raise ValueError("need C > 0 and k >= 1")
    logs = [
        m * math.log(C) + 2.0 * lgamma(m + 1) - m * math.log(k)
        for m in range(1, k + 1)
    ]
    arg = 1 + min(range(len(logs)), key=logs.__getitem__)
    diffs = [b - a for a, b in zip(logs, logs[1:])]
    rising = False
    unimodal = True
    for d in diffs:
        if d >= 0:
            rising = True
        elif rising:
            unimodal = False
            break
    target = math.sqrt(k / C)
    m_hat = max(1, int(target))
    bound_log = 2.0 + math.log(m_hat) - 2.0 * m_hat
    return TruncationScan(
        C=C,
        k=k,
        argmin=arg,
        min_value=math.exp(logs[arg - 1]),
        sqrt_target=target,
        unimodal=unimodal,
        within_one_of_target=abs(arg - target) <= 1.0,
        stirling_bound_ok=logs[arg - 1] <= bound_log + 1e-12,
    )


@dataclass(frozen=True)
class BoundSweep:
    deltas: tuple
    n_max: int
    k_max: int
    checked: int
    violations: tuple
    passed: bool

    def to_dict(self) -> dict:
        return {
            "deltas": list(self.deltas),
            "n_max": self.n_max,
            "k_max": self.k_max,
            "checked": self.checked,
            "violations": [list(v) for v in self.violations],
            "passed": self.passed,
        }


def exp_factorial_bound_check(
    deltas: Iterable[float] = (0.1, 0.5, 1.0, 2.0),
    n_max: int = 20,
    k_max: int = 10_000,
) -> BoundSweep:
    """Sweep k e^{-k delta} <= (2/delta)^{N+2} (N+1)! / k^{N+1} in log domain."""
    deltas = tuple(float(d) for d in deltas)
    if any(d <= 0 for d in deltas):
        raise ValueError("delta must be positive")
    ks = np.arange(1, k_max + 1, dtype=float)
    logk = np.log(ks)
    violations = []
    checked = 0
    for delta in deltas:
        for N in range(n_max + 1):
            lhs = logk - ks * delta
            rhs = (N + 2) * math.log(2.0 / delta) + lgamma(N + 2) - (N + 1) * logk
            bad = np.nonzero(lhs > rhs)[0]
            checked += len(ks)
            for idx in bad[:10]:
                violations.append((delta, N, int(ks[idx])))
    return BoundSweep(
        deltas=deltas,
        n_max=n_max,
        k_max=k_max,
        checked=checked,
        violations=tuple(violations),
        passed=not violations,
    )
