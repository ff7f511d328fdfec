"""Closed forms for constant holomorphic sectional curvature, plus exact model kernels.

For the potential (1/c) log(1 + c |x|^2) every Bergman coefficient is a
constant, vanishing above the dimension, and the family satisfies an exact
polynomial identity in the tensor power k.  The recursion here consumes only
the Taylor coefficients of ``e^u ((e^u - 1)/u)^(n-1)``, which is the Jacobian
ratio Delta0 written as a function of the scalar ``c theta . (x - y)``.

Curvature normalization: the projective model has holomorphic sectional
curvature 1 (not 2); all constants follow that convention.

The module also carries the two exact model kernels used as end-to-end
oracles: the projective space kernel in an affine chart and the flat
Bargmann-Fock kernel.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Sequence

from .series import TruncatedSeries, exponents_of_degree, multi_factorial


def delta0_taylor_coeffs(n: int, L: int) -> list:
    """Exact Taylor coefficients a_0..a_L of e^u ((e^u - 1)/u)^(n-1)."""
    if n < 1 or L < 0:
        raise ValueError("need n >= 1 and L >= 0")
    exp_u = TruncatedSeries(1, L, {(j,): Fraction(1, factorial(j)) for j in range(L + 1)})
    ratio = TruncatedSeries(1, L, {(j,): Fraction(1, factorial(j + 1)) for j in range(L + 1)})
    g = exp_u * ratio ** (n - 1)
    return [Fraction(g[(j,)]) for j in range(L + 1)]


def chsc_coefficients(n: int, c, M: int) -> list:
    """Exact constants b_0..b_M for curvature c in dimension n."""
    if M < 0:
        raise ValueError("M must be non-negative")
    c = Fraction(c)
    a = delta0_taylor_coeffs(n, M)
    b = [Fraction(1)]
    for m in range(1, M + 1):
        acc = Fraction(0)
        for l in range(1, m + 1):
            acc += (-c) ** l * Fraction(factorial(l + n - 1), factorial(n - 1)) * a[l] * b[m - l]
        b.append(-acc)
    return b


@dataclass(frozen=True)
class ChscModel:
    """One curvature model: dimension, curvature, and its exact constants."""

    n: int
    c: Fraction
    a: tuple
    b: tuple

    @classmethod
    def build(cls, n: int, c, M: int | None = None) -> "ChscModel":
        c = Fraction(c)
        order = max(n + 1, M if M is not None else 0)
        return cls(
            n=n,
            c=c,
            a=tuple(delta0_taylor_coeffs(n, order)),
            b=tuple(chsc_coefficients(n, c, order)),
        )


def polynomial_identity_check(model: ChscModel) -> bool:
    """Exact check of sum_j b_j k^{n-j} == c^n prod_{j=1}^n (k/c + j).

    The right side expands to prod (k + j c); for c = 0 it degenerates to
    k^n.  Also requires every computed b_m with m > n to vanish.
    """
    n, c = model.n, model.c
    for m in range(n + 1, len(model.b)):
        if model.b[m] != 0:
            return False
    if c == 0:
        return all(model.b[m] == 0 for m in range(1, len(model.b)))
    # prod_{j=1}^n (k + j c), lowest degree first
    poly = [Fraction(1)]
    for j in range(1, n + 1):
        root = j * c
        out = [Fraction(0)] * (len(poly) + 1)
        for d, coef in enumerate(poly):
            out[d] += coef * root
            out[d + 1] += coef
        poly = out
    lhs = [model.b[n - d] for d in range(n + 1)]  # coefficient of k^d is b_{n-d}
    return poly == lhs


def cpn_kernel(n: int, k: int, x: Sequence[complex], y: Sequence[complex]) -> complex:
    """Exact Bergman kernel of the projective model in an affine chart.

    ((k+n)! / (k! pi^n)) (1 + x . conj(y))^k, for the curvature 1 potential
    log(1 + |x|^2) at tensor power k.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    w = sum(complex(a) * complex(b).conjugate() for a, b in zip(x, y))
    coef = math.factorial(k + n) / (math.factorial(k) * math.pi**n)
    return coef * (1 + w) ** k


def cpn_kernel_monomial_sum(n: int, k: int, x: Sequence[complex], y: Sequence[complex]) -> complex:
    """Brute-force oracle: sum over the monomial section basis.

    Monomials z^alpha with |alpha| <= k have squared norms
    pi^n alpha! (k - |alpha|)! / (k + n)!; the kernel is the normalized sum
    of x^alpha conj(y)^alpha.
    """
    total = 0j
    for deg in range(k + 1):
        for alpha in exponents_of_degree(n, deg):
            term = 1 + 0j
            for a, xi, yi in zip(alpha, x, y):
                term *= complex(xi) ** a * complex(yi).conjugate() ** a
            norm_sq = (
                math.pi**n
                * multi_factorial(alpha)
                * math.factorial(k - deg)
                / math.factorial(k + n)
            )
            total += term / norm_sq
    return total


def flat_kernel(n: int, k: int, x: Sequence[complex], y: Sequence[complex]) -> complex:
    """The Bargmann-Fock kernel (k/pi)^n exp(k x . conj(y))."""
    if k < 1:
        raise ValueError("k must be >= 1")
    w = sum(complex(a) * complex(b).conjugate() for a, b in zip(x, y))
    return (k / math.pi) ** n * cmath.exp(k * w)


def chsc_psi_value(n: int, c, x: Sequence[complex], zbar: Sequence[complex]) -> complex:
    """Closed-form polarized potential (1/c) log(1 + c x . zbar), limit x . zbar at c = 0."""
    c = Fraction(c)
    w = sum(complex(a) * complex(b) for a, b in zip(x, zbar))
    if c == 0:
        return w
    cf = float(c)
    return cmath.log(1 + cf * w) / cf


def verdict_record(n: int, c, M: int) -> dict:
    """CLI-facing summary of the closed-form family for one (n, c)."""
    model = ChscModel.build(n, c, M)
    return {
        "n": n,
        "c": str(Fraction(c)),
        "M": M,
        "b": [str(v) for v in model.b[: M + 1]],
        "polynomial_check": "pass" if polynomial_identity_check(model) else "fail",
    }
