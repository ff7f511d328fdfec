"""Off-diagonal kernel evaluation and decay-rate checks.

The order-N kernel approximation is ``(k/pi)^n e^{k psi(x, conj y)}
(1 + sum_{j<=N} b_j(x, conj y)/k^j)``.  Reports carry the frame-invariant
weighted value ``|K| e^{-k(phi(x)+phi(y))/2}`` (computed in log domain, the
exponent never overflows) together with the diastasis and the residual of
the logarithmic decay law

    (1/k) log|K|_w  =  -D(x,y)/2 + n log(k)/k - n log(pi)/k + residual,

whose decay order in k is what the fit routines measure.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .chsc import chsc_coefficients, chsc_psi_value
from .coefficients import CoefficientTable
from .potential import GeometryPack
from .series import TruncatedSeries


def choose_truncation_order(k: int, C: float, max_order: int | None = None) -> int:
    """The optimal truncation order floor(sqrt(k/C)), clamped to max_order."""
    if k < 1 or C <= 0:
        raise ValueError("need k >= 1 and C > 0")
    n0 = int(math.isqrt(int(k / C))) if k / C >= 1 else 0
    # isqrt of the floor is safe here; guard the boundary explicitly
    while (n0 + 1) * (n0 + 1) <= k / C:
        n0 += 1
    while n0 * n0 > k / C:
        n0 -= 1
    if max_order is not None and n0 > max_order:
        return max_order
    return n0


@dataclass(frozen=True)
class KernelReport:
    k: int
    N: int
    x: tuple
    y: tuple
    psi_val: complex
    amplitude_val: complex
    K_val: complex
    K_weighted: float
    log_K_weighted: float
    diastasis: float
    log_residual: float

    def to_dict(self) -> dict:
        def c(z):
            z = complex(z)
            return [z.real, z.imag]

        return {
            "k": self.k,
            "N": self.N,
            "x": [c(v) for v in self.x],
            "y": [c(v) for v in self.y],
            "psi": c(self.psi_val),
            "amplitude": c(self.amplitude_val),
            "K": c(self.K_val),
            "K_weighted": self.K_weighted,
            "log_K_weighted": self.log_K_weighted,
            "diastasis": self.diastasis,
            "log_residual": self.log_residual,
        }


def evaluate_kernel(
    n: int,
    k: int,
    N: int,
    x: Sequence[complex],
    y: Sequence[complex],
    psi_fn: Callable,
    b_fn: Callable,
) -> KernelReport:
    """Assemble one report from value providers.

    ``psi_fn(x, zbar)`` returns the polarized potential; ``b_fn(j, x, zbar)``
    returns the order-j coefficient value, both holomorphic in their slots.
    """
    x = tuple(complex(v) for v in x)
    y = tuple(complex(v) for v in y)
    ybar = tuple(v.conjugate() for v in y)
    psi_xy = complex(psi_fn(x, ybar))
    phi_x = complex(psi_fn(x, tuple(v.conjugate() for v in x))).real
    phi_y = complex(psi_fn(y, ybar)).real
    amp = 1 + 0j
    for j in range(1, N + 1):
        amp += complex(b_fn(j, x, ybar)) / k**j
    dia = phi_x + phi_y - 2.0 * psi_xy.real
    log_prefactor = n * math.log(k / math.pi)
    log_amp = math.log(abs(amp)) if amp != 0 else float("-inf")
    log_mag = log_prefactor + k * psi_xy.real + log_amp
    phase = k * psi_xy.imag + cmath.phase(amp) if amp != 0 else 0.0
    try:
        K_val = math.exp(log_mag) * cmath.exp(1j * phase)
    except OverflowError:
        K_val = complex(float("inf"), 0.0)
    log_K_weighted = log_prefactor - k * dia / 2.0 + log_amp
    K_weighted = math.exp(log_K_weighted) if log_K_weighted < 700 else float("inf")
    # residual of the decay law, left minus right; the diastasis and
    # prefactor terms cancel identically, leaving log|amplitude| / k,
    # which is also the numerically stable way to evaluate it
    log_residual = log_amp / k
    return KernelReport(
        k=k,
        N=N,
        x=x,
        y=y,
        psi_val=psi_xy,
        amplitude_val=amp,
        K_val=K_val,
        K_weighted=K_weighted,
        log_K_weighted=log_K_weighted,
        diastasis=dia,
        log_residual=log_residual,
    )


def eval_KN(
    geom: GeometryPack,
    table: CoefficientTable,
    k: int,
    N: int,
    x: Sequence[complex],
    y: Sequence[complex],
) -> KernelReport:
    """Series-backed kernel report; points must sit inside the evaluation radius."""
    if N > table.M:
        raise ValueError(f"order {N} exceeds the computed table order {table.M}")
    radius = geom.spec.eval_radius + 1e-12
    for pt in (x, y):
        if max(abs(complex(v)) for v in pt) > radius:
            raise ValueError("evaluation point outside the configured radius")

    def psi_fn(px, zbar):
        return geom.psi.eval(list(px) + list(zbar))

    def b_fn(j, px, zbar):
        return table.b[j].eval(list(px) + list(zbar))

    return evaluate_kernel(geom.n, k, N, x, y, psi_fn, b_fn)


def eval_KN_chsc_closed(n: int, c, k: int, N: int, x, y) -> KernelReport:
    """Closed-form evaluation for the constant curvature models."""
    consts = chsc_coefficients(n, c, max(N, 0))

    def psi_fn(px, zbar):
        return chsc_psi_value(n, c, px, zbar)

    def b_fn(j, px, zbar):
        return complex(float(consts[j]))

    return evaluate_kernel(n, k, N, x, y, psi_fn, b_fn)


def eval_KN_derivative(
    geom: GeometryPack,
    table: CoefficientTable,
    k: int,
    N: int,
    x: Sequence[complex],
    y: Sequence[complex],
    alpha: Sequence[int],
) -> complex:
    """Derivative D^alpha of the order-N kernel approximation at (x, y).

    ``alpha`` is a multi-index over the 2n holomorphic slots (x-block, then
    the conjugate-y block; the kernel is antiholomorphic in y, so y
    derivatives act through conj(y)).  Exponential derivatives follow the
    recursion ``T_{b+e_i} = D_i T_b + k (D_i psi) T_b`` with
    ``T_b = e^{-k psi} D^b e^{k psi}``, everything by series differentiation.
    Ungated variant: no sharp numeric target, finite differences are the
    test oracle.
    """
    from .series import multi_binomial

    n = geom.n
    alpha = tuple(alpha)
    if len(alpha) != 2 * n or any(e < 0 for e in alpha):
        raise ValueError(f"bad derivative multi-index {alpha}")
    if N > table.M:
        raise ValueError(f"order {N} exceeds the computed table order {table.M}")
    psi_f = geom.psi.to_float()
    D = psi_f.trunc_degree
    psi_grad = [
        psi_f.diff(tuple(1 if j == i else 0 for j in range(2 * n)))
        for i in range(2 * n)
    ]
    amp_degree = min([table.b[j].trunc_degree for j in range(1, N + 1)], default=D)
    amp = TruncatedSeries.constant(2 * n, amp_degree, 1.0)
    for j in range(1, N + 1):
        amp = amp + table.b[j].to_float().truncate(amp_degree) * (1.0 / k**j)

    exp_factors: dict = {(0,) * (2 * n): TruncatedSeries.one(2 * n, D)}

    def exp_factor(beta) -> TruncatedSeries:
        hit = exp_factors.get(beta)
        if hit is not None:
            return hit
        i = max(j for j, e in enumerate(beta) if e > 0)
        lower = beta[:i] + (beta[i] - 1,) + beta[i + 1 :]
        t = exp_factor(lower)
        out_D = t.trunc_degree - 1
        step = t.diff(tuple(1 if j == i else 0 for j in range(2 * n)))
        mixed = (psi_grad[i].truncate(out_D) * t.truncate(out_D)) * float(k)
        result = step + mixed
        exp_factors[beta] = result
        return result

    point = list(complex(v) for v in x) + [complex(v).conjugate() for v in y]
    total = 0j
    for beta in _sub_multi(alpha):
        rest = tuple(a - b for a, b in zip(alpha, beta))
        t = exp_factor(beta)
        db = amp.diff(rest)
        out_D = min(t.trunc_degree, db.trunc_degree)
        piece = t.truncate(out_D) * db.truncate(out_D)
        total += multi_binomial(alpha, beta) * piece.eval(point)
    psi_xy = psi_f.eval(point)
    return (k / math.pi) ** n * cmath.exp(k * psi_xy) * total


def _sub_multi(alpha):
    if not alpha:
        yield ()
        return
    for head in range(alpha[0] + 1):
        for tail in _sub_multi(alpha[1:]):
            yield (head,) + tail


def make_series_evaluator(
    geom: GeometryPack, table: CoefficientTable, C: float | None = None
) -> Callable:
    """Evaluator (k, x, y) -> report with N = min(N0(k, C), M); fixed M without C."""

    def run(k, x, y):
        N = table.M if C is None else choose_truncation_order(k, C, table.M)
        return eval_KN(geom, table, k, N, x, y)

    return run


def make_chsc_closed_evaluator(n: int, c, N: int | None = None, C: float | None = None) -> Callable:
    cap = N if N is not None else n

    def run(k, x, y):
        order = cap if C is None else choose_truncation_order(k, C, cap)
        return eval_KN_chsc_closed(n, c, k, order, x, y)

    return run


@dataclass(frozen=True)
class DecayFit:
    """Least-squares decay exponent of a residual sequence over a k grid."""

    ks: tuple
    residuals: tuple
    slope: float | None
    intercept: float | None
    all_zero: bool

    def to_dict(self) -> dict:
        return {
            "ks": list(self.ks),
            "residuals": list(self.residuals),
            "slope": self.slope,
            "intercept": self.intercept,
            "all_zero": self.all_zero,
        }


def _fit(ks, residuals) -> DecayFit:
    live = [(k, abs(r)) for k, r in zip(ks, residuals) if abs(r) > 1e-300]
    if not live:
        return DecayFit(tuple(ks), tuple(residuals), None, None, True)
    if len(live) < 2:
        raise ValueError("need at least two nonzero residuals to fit a slope")
    logk = np.log([k for k, _ in live])
    logr = np.log([r for _, r in live])
    slope, intercept = np.polyfit(logk, logr, 1)
    return DecayFit(tuple(ks), tuple(residuals), float(slope), float(intercept), False)


def log_asymptotic_fit(evaluator: Callable, k_grid: Sequence[int], pairs) -> DecayFit:
    """Fit the decay of the logarithmic-law residual over a k grid.

    ``pairs`` is one fixed (x, y) pair or a callable k -> (x, y); shrinking
    pairs with k keeps them inside the decay law's validity window.
    """
    if not k_grid:
        raise ValueError("empty k grid")
    residuals = []
    for k in k_grid:
        x, y = pairs(k) if callable(pairs) else pairs
        residuals.append(evaluator(k, x, y).log_residual)
    return _fit(list(k_grid), residuals)


def scaling_fit(
    evaluator: Callable, n: int, k_grid: Sequence[int], u: Sequence[complex], v: Sequence[complex]
) -> DecayFit:
    """Fit the residual of the k^{-1/4}-scaled two-point law.

    Evaluates at (u k^{-1/4}, v k^{-1/4}) and subtracts the displayed limit
    ``-|u-v|^2/2 + n log(k)/sqrt(k) - n log(pi)/sqrt(k)`` from
    ``log|K|_w / sqrt(k)``.
    """
    if not k_grid:
        raise ValueError("empty k grid")
    sep = sum(abs(complex(a) - complex(b)) ** 2 for a, b in zip(u, v))
    residuals = []
    for k in k_grid:
        scale = k ** (-0.25)
        x = [complex(a) * scale for a in u]
        y = [complex(b) * scale for b in v]
        rep = evaluator(k, x, y)
        s = (
            rep.log_K_weighted / math.sqrt(k)
            + sep / 2.0
            - n * (math.log(k) - math.log(math.pi)) / math.sqrt(k)
        )
        residuals.append(s)
    return _fit(list(k_grid), residuals)
