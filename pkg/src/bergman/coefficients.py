"""Bergman coefficient series by the divergence-form amplitude recursion.

Order m is obtained from the lower orders by applying powers of the mixed
operator ``D_y . D_theta`` to the composed amplitude
``b_{m-l}(x, z(x,y,theta)) * Delta0(x,y,theta)``, restricting to ``y = x``
and converting the result back to ``(x, z)`` coordinates through the
on-diagonal phase ``theta(x,x,z) = psi_x(x,z)``.  All steps are exact
rational series operations.

Degree bookkeeping: with geometry built at truncation degree D, the order m
coefficient is exact through total degree ``D - 2m - 2`` for m >= 1 (the
2l mixed derivatives at each level cost 2l degrees, and Delta0 itself sits
two derivative orders below psi).  The table stores those effective degrees,
and the entry point refuses degrees that cannot support the requested order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from math import factorial
from typing import Sequence

from .potential import DegreeBudgetError, GeometryPack
from .sampling import polydisc_points
from .series import TruncatedSeries, exponents_of_degree, multi_factorial


def required_geometry_degree(order: int, min_degree: int = 0) -> int:
    """Smallest geometry truncation degree exact through ``min_degree`` at ``order``."""
    return 2 * order + 2 + min_degree


@dataclass(frozen=True)
class CoefficientTable:
    """The family b_0..b_M in (x, z) blocks, with optional amplitudes a_m."""

    n: int
    M: int
    b: tuple                      # (x, z) series, index 0..M
    degrees: tuple                # effective truncation degree per order
    spec_sha256: str
    a: tuple | None = None        # (x, y, theta) series, index 0..M

    def to_record(self) -> dict:
        rec = {
            "n": self.n,
            "M": self.M,
            "effective_degrees": list(self.degrees),
            "spec_sha256": self.spec_sha256,
            "b": [s.to_record() for s in self.b],
        }
        if self.a is not None:
            rec["a"] = [s.to_record() for s in self.a]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "CoefficientTable":
        return cls(
            n=rec["n"],
            M=rec["M"],
            b=tuple(TruncatedSeries.from_record(r) for r in rec["b"]),
            degrees=tuple(rec["effective_degrees"]),
            spec_sha256=rec["spec_sha256"],
            a=tuple(TruncatedSeries.from_record(r) for r in rec["a"]) if "a" in rec else None,
        )


class _Composer:
    """Shared composition caches tied to one geometry."""

    def __init__(self, geom: GeometryPack):
        self.geom = geom
        n, D = geom.n, geom.degree
        ids3 = TruncatedSeries.variables(3 * n, D - 1)
        self.into_xytheta = [ids3[i] for i in range(n)] + list(geom.z_of_theta)
        self.into_xytheta_cache: dict = {}
        ids2 = TruncatedSeries.variables(2 * n, D - 1)
        self.into_xz = [ids2[i] for i in range(n)] + list(geom.psi_x)
        self.into_xz_cache: dict = {}

    def substitute_z(self, f_xz: TruncatedSeries) -> TruncatedSeries:
        """f(x, z) -> f(x, z(x,y,theta)) in (x, y, theta) blocks."""
        return f_xz.compose(self.into_xytheta, cache=self.into_xytheta_cache)

    def to_xz(self, f_xtheta: TruncatedSeries) -> TruncatedSeries:
        """f(x, theta) -> f(x, psi_x(x, z)) in (x, z) blocks."""
        return f_xtheta.compose(self.into_xz, cache=self.into_xz_cache)


def _merge_y_into_x(f: TruncatedSeries, n: int) -> TruncatedSeries:
    """Formal substitution y = x: (x, y, w) -> (x, w)."""
    var_map = tuple(range(n)) + tuple(range(n)) + tuple(range(n, 2 * n))
    return f.remap_variables(2 * n, var_map)


def _mixed_derivative_sum(g: TruncatedSeries, n: int, level: int) -> TruncatedSeries:
    """(D_y . D_theta)^level / level! of a series in (x, y, theta) blocks."""
    acc = None
    for delta in exponents_of_degree(n, level):
        xi = (0,) * n + delta + delta
        term = g.diff(xi) * Fraction(1, multi_factorial(delta))
        acc = term if acc is None else acc + term
    return acc


def bergman_coefficients(
    geom: GeometryPack, M: int, min_degree: int = 0
) -> CoefficientTable:
    """Compute b_0..b_M for the given geometry.

    Raises :class:`DegreeBudgetError` when the geometry degree cannot support
    order M with every coefficient exact through ``min_degree``.
    """
    n, D = geom.n, geom.degree
    need = required_geometry_degree(M, min_degree)
    if M >= 1 and D < need:
        raise DegreeBudgetError(
            f"order {M} with output degree {min_degree} needs geometry degree "
            f">= {need}, got {D}",
            need,
        )
    composer = _Composer(geom)
    b = [TruncatedSeries.one(2 * n, D)]
    amplitudes = {0: geom.delta0_xytheta}
    for m in range(1, M + 1):
        total = None
        for level in range(1, m + 1):
            j = m - level
            g = amplitudes.get(j)
            if g is None:
                comp = composer.substitute_z(b[j])
                g = comp * geom.delta0_xytheta.truncate(comp.trunc_degree)
                amplitudes[j] = g
            term = _mixed_derivative_sum(g, n, level)
            merged = _merge_y_into_x(term, n)
            total = merged if total is None else total + merged
        b_m = composer.to_xz(-total)
        b.append(b_m)
    return CoefficientTable(
        n=n,
        M=M,
        b=tuple(b),
        degrees=tuple(s.trunc_degree for s in b),
        spec_sha256=geom.spec.sha256(),
    )


def amplitude_from_b(table: CoefficientTable, geom: GeometryPack) -> CoefficientTable:
    """Fill the amplitude family: a_0 = Delta0 - 1, a_m = (b_m o z) * Delta0."""
    composer = _Composer(geom)
    a = [geom.delta0_xytheta - 1]
    for m in range(1, table.M + 1):
        comp = composer.substitute_z(table.b[m])
        a.append(comp * geom.delta0_xytheta.truncate(comp.trunc_degree))
    return replace(table, a=tuple(a))


@dataclass(frozen=True)
class NormTable:
    """Grid sup-norms of z-derivatives of the coefficients over U x U.

    Norms are maxima over a deterministic finite grid, not true sup-norms;
    the sampling radius and grid size are part of the record.
    """

    n: int
    M: int
    xi_max: int
    radius: float
    grid: int
    entries: dict  # (m, xi) -> float

    def entry(self, m: int, xi) -> float:
        return self.entries[(m, tuple(xi))]

    def order_norms(self) -> list:
        """The plain norms b_{m,0} for m = 0..M."""
        zero = (0,) * self.n
        return [self.entries[(m, zero)] for m in range(self.M + 1)]

    def csv_rows(self) -> list:
        rows = []
        for (m, xi) in sorted(self.entries):
            norm = self.entries[(m, xi)]
            scale = factorial(2 * m + 1) * multi_factorial(xi)
            rows.append(
                {
                    "m": m,
                    "xi": ";".join(str(e) for e in xi),
                    "norm": norm,
                    "normalized": norm / scale,
                    "radius": self.radius,
                    "grid": self.grid,
                }
            )
        return rows


def derivative_norm_table(
    table: CoefficientTable,
    geom: GeometryPack,
    radius: float,
    grid: int,
    xi_max: int = 0,
) -> NormTable:
    """Evaluate ||D_z^xi b_m|| on a grid x grid product grid in the polydisc."""
    if grid < 2:
        raise ValueError("grid must be >= 2")
    if radius > geom.spec.eval_radius + 1e-12:
        raise ValueError("radius exceeds the spec evaluation radius")
    n = geom.n
    xs = polydisc_points(n, radius, grid)
    zs = polydisc_points(n, radius, grid, skip=grid)
    entries = {}
    for m in range(table.M + 1):
        fm = table.b[m]
        for order in range(xi_max + 1):
            for xi in exponents_of_degree(n, order):
                series = fm.diff((0,) * n + xi)
                best = 0.0
                for x in xs:
                    for z in zs:
                        v = abs(series.eval(list(x) + list(z)))
                        if v > best:
                            best = v
                entries[(m, xi)] = best
    return NormTable(
        n=n, M=table.M, xi_max=xi_max, radius=radius, grid=grid, entries=entries
    )
