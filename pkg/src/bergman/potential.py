"""Kahler potentials, polarization, and the derived contour geometry.

A potential is supplied as Hermitian coefficient data for
``phi(x) = sum c[alpha,beta] x^alpha conj(x)^beta`` near 0.  This module
builds its polarization ``psi(x, z)`` (replace ``conj(x)`` by an independent
holomorphic block ``z``), the averaged-gradient phase ``theta(x, y, z)``, the
inverse map ``z(x, y, theta)``, the Jacobian ratio ``Delta0``, Calabi's
diastasis, and a numeric check that the phase defines a good contour.

Variable block conventions used across the package, for dimension n:

* ``(x, z)`` series: x occupies variables 0..n-1, z occupies n..2n-1.
* ``(x, y, z)`` and ``(x, y, theta)`` series: x is 0..n-1, y is n..2n-1 and
  the third block is 2n..3n-1.
* ``(x, theta)`` series (y already merged into x): x is 0..n-1, theta is
  n..2n-1.

Everything is exact rational arithmetic unless a float-mode build is asked
for; the segment integral in the phase is done termwise with Beta-function
weights, never by quadrature.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Mapping, Sequence

from .sampling import polydisc_points
from .series import SeriesMatrix, TruncatedSeries


class SpecValidationError(ValueError):
    """A potential specification violates one of its invariants."""


class DegreeBudgetError(ValueError):
    """The truncation degree is too small for the requested computation."""

    def __init__(self, message: str, required_degree: int):
        super().__init__(message)
        self.required_degree = required_degree


@dataclass(frozen=True)
class PotentialSpec:
    """Coefficient data of a real-analytic Kahler potential near 0.

    ``coeffs`` maps ``(alpha, beta)`` exponent-tuple pairs to real rational
    values; Hermitian symmetry of real data reads ``c[a,b] == c[b,a]``.
    """

    n: int
    trunc_degree: int
    eval_radius: float
    coeffs: Mapping

    def validate(self) -> None:
        n = self.n
        if n < 1:
            raise SpecValidationError("dimension n must be positive")
        if self.trunc_degree < 2:
            raise SpecValidationError("trunc_degree must be at least 2")
        if not self.eval_radius > 0:
            raise SpecValidationError("eval_radius must be positive")
        zero = (0,) * n
        for (a, b), v in self.coeffs.items():
            if len(a) != n or len(b) != n or min(a + b, default=0) < 0:
                raise SpecValidationError(f"malformed term index ({a}, {b})")
        if self.coeffs.get((zero, zero), 0) != 0:
            raise SpecValidationError("normalization violated: c00 must be 0")
        for (a, b), v in self.coeffs.items():
            if self.coeffs.get((b, a), 0) != v:
                raise SpecValidationError(
                    f"hermitian symmetry violated: c[{a},{b}] != c[{b},{a}]"
                )
        for i in range(n):
            e = tuple(1 if j == i else 0 for j in range(n))
            if self.coeffs.get((e, zero), 0) != 0:
                raise SpecValidationError(
                    "pure linear term present: the phase map must fix the origin"
                )
        minors = self.hessian()
        for size in range(1, n + 1):
            sub = [row[:size] for row in minors[:size]]
            if _fraction_det(sub) <= 0:
                raise SpecValidationError(
                    "hessian not positive definite "
                    f"(leading principal minor of size {size} is not positive)"
                )

    def hessian(self) -> list:
        """The mixed Hessian [c_{e_i e_j}] at the origin, as Fractions."""
        n = self.n
        out = []
        for i in range(n):
            ei = tuple(1 if k == i else 0 for k in range(n))
            row = []
            for j in range(n):
                ej = tuple(1 if k == j else 0 for k in range(n))
                row.append(Fraction(self.coeffs.get((ei, ej), 0)))
            out.append(row)
        return out

    def hessian_min_eigenvalue(self) -> float:
        import numpy as np

        h = np.array([[float(v) for v in row] for row in self.hessian()])
        return float(np.linalg.eigvalsh(h)[0])

    # -- serialization ------------------------------------------------------

    def to_record(self) -> dict:
        terms = []
        for (a, b) in sorted(self.coeffs, key=lambda ab: (sum(ab[0]) + sum(ab[1]), ab)):
            v = Fraction(self.coeffs[(a, b)])
            if v == 0:
                continue
            terms.append(
                {"alpha": list(a), "beta": list(b), "num": v.numerator, "den": v.denominator}
            )
        return {
            "n": self.n,
            "trunc_degree": self.trunc_degree,
            "eval_radius": self.eval_radius,
            "terms": terms,
        }

    @classmethod
    def from_record(cls, record: dict) -> "PotentialSpec":
        coeffs = {}
        for t in record["terms"]:
            key = (tuple(t["alpha"]), tuple(t["beta"]))
            coeffs[key] = coeffs.get(key, 0) + Fraction(t["num"], t["den"])
        return cls(
            n=record["n"],
            trunc_degree=record["trunc_degree"],
            eval_radius=float(record["eval_radius"]),
            coeffs=coeffs,
        )

    def to_file(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_record(), fh, sort_keys=True, indent=2)
            fh.write("\n")

    @classmethod
    def from_file(cls, path) -> "PotentialSpec":
        with open(path) as fh:
            return cls.from_record(json.load(fh))

    def sha256(self) -> str:
        blob = json.dumps(self.to_record(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


# -- presets ----------------------------------------------------------------


def preset_flat(n: int, degree: int, radius: float = 0.5) -> PotentialSpec:
    """phi = |x|^2, the Bargmann-Fock model."""
    coeffs = {}
    for i in range(n):
        e = tuple(1 if j == i else 0 for j in range(n))
        coeffs[(e, e)] = Fraction(1)
    return PotentialSpec(n, degree, radius, coeffs)


def preset_chsc(n: int, c, degree: int, radius: float = 0.3) -> PotentialSpec:
    """phi = (1/c) log(1 + c |x|^2): constant holomorphic sectional curvature c.

    The normalization gives the projective model curvature 1 (not 2); for
    c = 0 the limit is the flat potential.
    """
    c = Fraction(c)
    if c == 0:
        return preset_flat(n, degree, radius)
    coeffs = {}
    for j in range(1, degree // 2 + 1):
        scale = Fraction((-1) ** (j + 1)) * c ** (j - 1) * factorial(j - 1)
        for delta in _exponents(n, j):
            coeffs[(delta, delta)] = scale / _multi_fact(delta)
    return PotentialSpec(n, degree, radius, coeffs)


def preset_quartic(n: int, t, degree: int, radius: float = 0.3) -> PotentialSpec:
    """phi = |x|^2 + t |x|^4, the minimal non-model perturbation."""
    t = Fraction(t)
    coeffs = {}
    for i in range(n):
        e = tuple(1 if j == i else 0 for j in range(n))
        coeffs[(e, e)] = Fraction(1)
    if t != 0 and degree >= 4:
        for delta in _exponents(n, 2):
            key = (delta, delta)
            coeffs[key] = coeffs.get(key, Fraction(0)) + 2 * t / _multi_fact(delta)
    return PotentialSpec(n, degree, radius, coeffs)


def make_preset(name: str, n: int, degree: int, param=None, radius=None) -> PotentialSpec:
    kwargs = {} if radius is None else {"radius": radius}
    if name == "flat":
        return preset_flat(n, degree, **kwargs)
    if name == "chsc":
        return preset_chsc(n, Fraction(param if param is not None else 1), degree, **kwargs)
    if name == "quartic":
        return preset_quartic(n, Fraction(param if param is not None else "1/10"), degree, **kwargs)
    raise SpecValidationError(f"unknown preset {name!r} (expected flat, chsc or quartic)")


def _exponents(n: int, degree: int):
    from .series import exponents_of_degree

    return exponents_of_degree(n, degree)


def _multi_fact(index) -> int:
    out = 1
    for e in index:
        out *= factorial(e)
    return out


def _fraction_det(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    size = len(rows)
    if size == 1:
        return Fraction(rows[0][0])
    acc = Fraction(0)
    for j in range(size):
        minor = [[row[c] for c in range(size) if c != j] for row in rows[1:]]
        term = Fraction(rows[0][j]) * _fraction_det(minor)
        acc += -term if j % 2 else term
    return acc


def _fraction_matrix_inverse(rows: Sequence[Sequence[Fraction]]) -> list:
    size = len(rows)
    aug = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(size)]
           for i, row in enumerate(rows)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular linear part")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(size):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[size:] for row in aug]


# -- polarization and phase ---------------------------------------------------


def polarize(spec: PotentialSpec, mode: str = "rational") -> TruncatedSeries:
    """The holomorphic extension psi(x, z) with psi(x, conj(x)) = phi(x)."""
    spec.validate()
    n, D = spec.n, spec.trunc_degree
    coeffs = {}
    for (a, b), v in spec.coeffs.items():
        if sum(a) + sum(b) > D or v == 0:
            continue
        value = Fraction(v) if mode == "rational" else float(v)
        coeffs[a + b] = value
    return TruncatedSeries(2 * n, D, coeffs)


def segment_average(
    f: TruncatedSeries,
    n: int,
    block_start: int,
    x_start: int,
    y_start: int,
    out_nvars: int,
    passthrough: Mapping[int, int],
) -> TruncatedSeries:
    """Integrate f with its block at ``block_start`` moved along a segment.

    Replaces the n variables starting at ``block_start`` by
    ``t*x + (1-t)*y`` and integrates t over [0, 1] exactly: the monomial
    ``w^gamma`` contributes ``binom(gamma, j) * |j|! |gamma - j|! / (|gamma|+1)!``
    at ``x^j y^(gamma-j)``.  Other variables move via ``passthrough``.
    """
    out = {}
    block = range(block_start, block_start + n)
    for key, value in f.coeffs.items():
        gamma = tuple(key[i] for i in block)
        base = [0] * out_nvars
        for src, dst in passthrough.items():
            base[dst] += key[src]
        total = sum(gamma)
        denom = factorial(total + 1)
        for j in _splits(gamma):
            w = 1
            for g, jj in zip(gamma, j):
                w *= comb(g, jj)
            js = sum(j)
            weight = Fraction(w * factorial(js) * factorial(total - js), denom)
            new_key = list(base)
            for i in range(n):
                new_key[x_start + i] += j[i]
                new_key[y_start + i] += gamma[i] - j[i]
            new_key = tuple(new_key)
            out[new_key] = out.get(new_key, 0) + value * weight
    return TruncatedSeries(out_nvars, f.trunc_degree, out)


def _splits(gamma):
    """All componentwise j <= gamma, deterministic order."""
    if not gamma:
        yield ()
        return
    for head in range(gamma[0] + 1):
        for tail in _splits(gamma[1:]):
            yield (head,) + tail


def build_theta(psi: TruncatedSeries) -> list:
    """The phase theta_i(x,y,z): the x-gradient of psi averaged from y to x."""
    n = psi.nvars // 2
    out = []
    passthrough = {n + i: 2 * n + i for i in range(n)}  # z block through
    for i in range(n):
        xi = tuple(1 if j == i else 0 for j in range(2 * n))
        g = psi.diff(xi)
        out.append(
            segment_average(
                g, n, block_start=0, x_start=0, y_start=n,
                out_nvars=3 * n, passthrough=passthrough,
            )
        )
    return out


def invert_theta(theta: Sequence[TruncatedSeries]) -> list:
    """Solve theta(x,y,z) = t for z as a series in (x, y, t).

    Degree-by-degree Newton iteration on formal series: each sweep applies
    z <- H^{-1} (t - R(x, y, z)) where H is the constant z-linear part and R
    the rest; one sweep gains at least one exact degree.
    """
    n3 = theta[0].nvars
    n = n3 // 3
    D = theta[0].trunc_degree
    hess = []
    for i in range(n):
        row = []
        for j in range(n):
            key = tuple(1 if k == 2 * n + j else 0 for k in range(n3))
            row.append(Fraction(theta[i].coeffs.get(key, 0)))
        hess.append(row)
    if _fraction_det(hess) == 0:
        raise ValueError("singular linear part: phase map not invertible at 0")
    hinv = _fraction_matrix_inverse(hess)

    zvars = TruncatedSeries.variables(n3, D)
    remainder = []
    for i in range(n):
        r = theta[i]
        for j in range(n):
            if hess[i][j] != 0:
                r = r - hess[i][j] * zvars[2 * n + j]
        remainder.append(r)

    ident = zvars[: 2 * n]
    tvars = zvars[2 * n :]
    z = [sum((hinv[i][j] * tvars[j] for j in range(n)), TruncatedSeries.zero(n3, D))
         for i in range(n)]
    for _ in range(D + 1):
        w = [remainder[i].compose(list(ident) + z) for i in range(n)]
        new_z = []
        for i in range(n):
            acc = TruncatedSeries.zero(n3, D)
            for j in range(n):
                if hinv[i][j] != 0:
                    acc = acc + hinv[i][j] * (tvars[j] - w[j])
            new_z.append(acc)
        if new_z == z:
            break
        z = new_z
    return z


def build_delta0(
    psi: TruncatedSeries,
    theta: Sequence[TruncatedSeries],
    z_of_theta: Sequence[TruncatedSeries],
) -> tuple:
    """The Jacobian ratio det psi_yz / det theta_z, in both coordinate systems."""
    n = psi.nvars // 2
    n3 = 3 * n
    D = psi.trunc_degree
    # psi as a function of (y, z) inside the (x,y,z) space
    psi_y = psi.remap_variables(n3, tuple(range(n, 2 * n)) + tuple(range(2 * n, 3 * n)))
    num_entries = []
    den_entries = []
    for i in range(n):
        for j in range(n):
            dyz = [0] * n3
            dyz[n + i] += 1
            dyz[2 * n + j] += 1
            num_entries.append(psi_y.diff(tuple(dyz)))
            dz = [0] * n3
            dz[2 * n + j] += 1
            den_entries.append(theta[i].diff(tuple(dz)).truncate(D - 2))
    det_num = SeriesMatrix(n, n, num_entries).det()
    det_den = SeriesMatrix(n, n, den_entries).det()
    delta0_xyz = det_num * det_den.invert()
    ids = TruncatedSeries.variables(n3, z_of_theta[0].trunc_degree)[: 2 * n]
    args = list(ids) + [z.truncate(z_of_theta[0].trunc_degree) for z in z_of_theta]
    delta0_xytheta = delta0_xyz.compose(args)
    return delta0_xyz, delta0_xytheta


@dataclass(frozen=True)
class GeometryPack:
    """Derived series geometry of one potential at a fixed truncation degree."""

    spec: PotentialSpec
    n: int
    degree: int
    psi: TruncatedSeries            # (x, z), degree D
    psi_x: tuple                    # n series, (x, z), degree D - 1
    theta: tuple                    # n series, (x, y, z), degree D - 1
    z_of_theta: tuple               # n series, (x, y, theta), degree D - 1
    delta0_xyz: TruncatedSeries     # (x, y, z), degree D - 2
    delta0_xytheta: TruncatedSeries  # (x, y, theta), degree D - 2


def build_geometry(spec: PotentialSpec, mode: str = "rational") -> GeometryPack:
    psi = polarize(spec, mode=mode)
    n, D = spec.n, spec.trunc_degree
    if D < 3:
        raise DegreeBudgetError("geometry needs trunc_degree >= 3", 3)
    psi_x = tuple(
        psi.diff(tuple(1 if j == i else 0 for j in range(2 * n))) for i in range(n)
    )
    theta = build_theta(psi)
    z_of_theta = invert_theta(theta)
    if mode == "rational":
        ids = TruncatedSeries.variables(3 * n, D - 1)
        roundtrip = [t.compose(list(ids[: 2 * n]) + list(z_of_theta)) for t in theta]
        for i in range(n):
            if roundtrip[i] != ids[2 * n + i]:
                raise ArithmeticError("phase inversion failed the round-trip identity")
    delta0_xyz, delta0_xytheta = build_delta0(psi, theta, z_of_theta)
    if delta0_xytheta.constant_term != 1 and mode == "rational":
        raise ArithmeticError("Delta0 must have constant term 1")
    return GeometryPack(
        spec=spec,
        n=n,
        degree=D,
        psi=psi,
        psi_x=psi_x,
        theta=tuple(theta),
        z_of_theta=tuple(z_of_theta),
        delta0_xyz=delta0_xyz,
        delta0_xytheta=delta0_xytheta,
    )


# -- numeric functionals ------------------------------------------------------


def phi_value(psi: TruncatedSeries, x: Sequence[complex]) -> float:
    """phi(x) = psi(x, conj x); the imaginary part vanishes up to roundoff."""
    n = psi.nvars // 2
    pt = list(x) + [complex(v).conjugate() for v in x]
    return psi.eval(pt).real


def psi_value(psi: TruncatedSeries, x: Sequence[complex], zbar: Sequence[complex]) -> complex:
    pt = list(x) + list(zbar)
    return psi.eval(pt)


def diastasis(psi: TruncatedSeries, x: Sequence[complex], y: Sequence[complex]) -> float:
    """Calabi's diastasis phi(x) + phi(y) - 2 Re psi(x, conj y)."""
    cross = psi_value(psi, x, [complex(v).conjugate() for v in y])
    return phi_value(psi, x) + phi_value(psi, y) - 2.0 * cross.real


@dataclass(frozen=True)
class ContourReport:
    delta: float
    samples: int
    max_excess: float
    worst_pair: tuple
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "samples": self.samples,
            "max_excess": self.max_excess,
            "worst_pair": {
                "x": [[v.real, v.imag] for v in self.worst_pair[0]],
                "y": [[v.real, v.imag] for v in self.worst_pair[1]],
            },
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def check_good_contour(
    spec: PotentialSpec,
    psi: TruncatedSeries,
    samples: int = 200,
    delta: float | None = None,
    tolerance: float = 1e-9,
) -> ContourReport:
    """Numeric sweep of the contour inequality.

    Evaluates ``2 Re[psi(x, conj y) - psi(y, conj y)] + phi(y) - phi(x)
    + delta |x - y|^2`` over deterministic sample pairs and reports the
    maximum; the contour is good for this delta when the maximum is <= 0.
    The default delta is half the smallest Hessian eigenvalue.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = spec.n
    if delta is None:
        delta = 0.5 * spec.hessian_min_eigenvalue()
    xs = polydisc_points(n, spec.eval_radius, samples)
    ys = polydisc_points(n, spec.eval_radius, samples, skip=samples)
    worst = float("-inf")
    worst_pair = (xs[0], ys[0])
    for x, y in zip(xs, ys):
        ybar = [v.conjugate() for v in y]
        q = (
            2.0 * (psi_value(psi, x, ybar) - psi_value(psi, y, ybar)).real
            + phi_value(psi, y)
            - phi_value(psi, x)
            + delta * sum(abs(a - b) ** 2 for a, b in zip(x, y))
        )
        if q > worst:
            worst = q
            worst_pair = (x, y)
    return ContourReport(
        delta=float(delta),
        samples=samples,
        max_excess=worst,
        worst_pair=worst_pair,
        tolerance=tolerance,
        passed=worst <= tolerance,
    )
