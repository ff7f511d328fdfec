"""Transport-equation chain for the kernel amplitude.

An independent route to the Bergman coefficients: vector amplitudes A_m are
produced order by order from fundamental-theorem-of-calculus solutions of the
division problem ``(x - y) . A_m = RHS_m``, where each right hand side is
built from derivatives of the previous order composed through the phase
chain ``theta -> z(x,y,theta) -> theta(x,x,z)``.  The scalar amplitude is
then reassembled as ``(1 + k (x-y).A + D_theta.A) / Delta0`` and collapsed
at ``y = x``, giving coefficients that must agree exactly with the
divergence-form recursion of :mod:`bergman.coefficients`.

The particular antiderivative solutions used here are the segment averages;
they are what makes the chain reproducible (solutions of the division
problem are not unique).

Degree bookkeeping, asserted at runtime: with geometry at degree D the order
m vector amplitude is exact through ``D - 2m - 1`` (one y derivative and one
theta derivative per step), so a chain to order M needs ``D >= 2M + 1`` and
coefficient reconstruction needs ``D >= 2M + 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .potential import DegreeBudgetError, GeometryPack, segment_average
from .series import TruncatedSeries, mul_trunc


@dataclass(frozen=True)
class TransportChain:
    """Vector amplitudes A_1..A_M; index 0 holds the zero vector A_0."""

    n: int
    M: int
    A: tuple  # A[m] is a tuple of n series in (x, y, theta) blocks

    def to_record(self) -> dict:
        return {
            "n": self.n,
            "M": self.M,
            "A": [[s.to_record() for s in vec] for vec in self.A],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "TransportChain":
        return cls(
            n=rec["n"],
            M=rec["M"],
            A=tuple(
                tuple(TruncatedSeries.from_record(r) for r in vec) for vec in rec["A"]
            ),
        )


def _segment_average_y(f: TruncatedSeries, n: int) -> TruncatedSeries:
    """Integrate f(x, t x + (1-t) y, theta) dt over [0, 1], termwise."""
    passthrough = {i: i for i in range(n)}
    passthrough.update({2 * n + i: 2 * n + i for i in range(n)})
    return segment_average(
        f, n, block_start=n, x_start=0, y_start=n, out_nvars=3 * n,
        passthrough=passthrough,
    )


def _y_gradient_average(f: TruncatedSeries, n: int) -> list:
    """Components -int_0^1 (D_{y_i} f)(x, tx+(1-t)y, theta) dt."""
    out = []
    for i in range(n):
        xi = tuple(1 if j == n + i else 0 for j in range(3 * n))
        out.append(-_segment_average_y(f.diff(xi), n))
    return out


def _divergence_theta(vec, n: int) -> TruncatedSeries:
    acc = None
    for i in range(n):
        xi = tuple(1 if j == 2 * n + i else 0 for j in range(3 * n))
        term = vec[i].diff(xi)
        acc = term if acc is None else acc + term
    return acc


class _PhaseChain:
    """Composition helpers shared across transport steps of one geometry."""

    def __init__(self, geom: GeometryPack):
        self.geom = geom
        n, D = geom.n, geom.degree
        ids3 = TruncatedSeries.variables(3 * n, D - 1)
        into_xytheta = [ids3[i] for i in range(n)] + list(geom.z_of_theta)
        cache: dict = {}
        # w_i = theta_i(x, x, z(x,y,theta)) = psi_x_i(x, z(x,y,theta))
        self.w = [p.compose(into_xytheta, cache=cache) for p in geom.psi_x]
        self.w_args = [ids3[i] for i in range(n)] + self.w
        self.w_cache: dict = {}
        ids2 = TruncatedSeries.variables(2 * n, D - 1)
        self.into_xz = [ids2[i] for i in range(n)] + list(geom.psi_x)
        self.into_xz_cache: dict = {}

    def diagonal_pullback(self, f_xtheta: TruncatedSeries) -> TruncatedSeries:
        """f(x, theta) -> f(x, theta(x,x,z(x,y,theta))) in (x,y,theta) blocks."""
        return f_xtheta.compose(self.w_args, cache=self.w_cache)

    def to_xz(self, f_xtheta: TruncatedSeries) -> TruncatedSeries:
        return f_xtheta.compose(self.into_xz, cache=self.into_xz_cache)


def _merge_y_into_x(f: TruncatedSeries, n: int) -> TruncatedSeries:
    var_map = tuple(range(n)) + tuple(range(n)) + tuple(range(n, 2 * n))
    return f.remap_variables(2 * n, var_map)


def _step_rhs(geom: GeometryPack, chain_m_minus_1, phase: _PhaseChain):
    """The pair (P, bracket) with bracket = Delta0 * Q - P for one step."""
    n = geom.n
    p = _divergence_theta(chain_m_minus_1, n)
    q = phase.diagonal_pullback(_merge_y_into_x(p, n))
    delta0 = geom.delta0_xytheta.truncate(q.trunc_degree)
    bracket = delta0 * q - p.truncate(q.trunc_degree)
    return p, bracket


def first_amplitude(geom: GeometryPack) -> tuple:
    """A_1: componentwise -int_0^1 (D_{y_i} Delta0)(x, tx+(1-t)y, theta) dt."""
    return tuple(_y_gradient_average(geom.delta0_xytheta, geom.n))


def next_amplitude(geom: GeometryPack, prev_vec, m: int, phase: _PhaseChain | None = None) -> tuple:
    """A_m from A_{m-1}, for m >= 2, by the same averaged-gradient solution."""
    if m < 2:
        raise ValueError("next_amplitude starts at order 2")
    if phase is None:
        phase = _PhaseChain(geom)
    _, bracket = _step_rhs(geom, prev_vec, phase)
    return tuple(_y_gradient_average(bracket, geom.n))


def transport_chain(geom: GeometryPack, M: int) -> TransportChain:
    """Build A_1..A_M; raises when the geometry degree cannot support M."""
    n, D = geom.n, geom.degree
    if M >= 1 and D < 2 * M + 1:
        raise DegreeBudgetError(
            f"transport chain to order {M} needs geometry degree >= {2 * M + 1}, got {D}",
            2 * M + 1,
        )
    zero_vec = tuple(
        TruncatedSeries.zero(3 * n, max(0, D - 1)) for _ in range(n)
    )
    vectors = [zero_vec]
    if M >= 1:
        vectors.append(first_amplitude(geom))
    phase = _PhaseChain(geom)
    for m in range(2, M + 1):
        vectors.append(next_amplitude(geom, vectors[m - 1], m, phase))
    return TransportChain(n=n, M=M, A=tuple(vectors))


def division_identity_gap(geom: GeometryPack, chain: TransportChain, m: int) -> TruncatedSeries:
    """(x - y) . A_m minus its defining right hand side; zero when exact.

    For m = 1 the right hand side is Delta0 - 1; for m >= 2 it is
    Delta0 * (D_theta . A_{m-1})(x,x,theta(x,x,z(x,y,theta))) - D_theta . A_{m-1}.
    """
    n = geom.n
    if m == 1:
        rhs = geom.delta0_xytheta - 1
    else:
        phase = _PhaseChain(geom)
        _, rhs = _step_rhs(geom, chain.A[m - 1], phase)
    out_degree = min(chain.A[m][0].trunc_degree + 1, rhs.trunc_degree)
    lhs = TruncatedSeries.zero(3 * n, out_degree)
    for i in range(n):
        xy = TruncatedSeries(
            3 * n,
            1,
            {
                tuple(1 if j == i else 0 for j in range(3 * n)): 1,
                tuple(1 if j == n + i else 0 for j in range(3 * n)): -1,
            },
        )
        lhs = lhs + mul_trunc(xy, chain.A[m][i], out_degree)
    return lhs - rhs.truncate(out_degree)


def reconstruct_coefficients(geom: GeometryPack, chain: TransportChain) -> list:
    """Coefficients b_0..b_M from the chain, in (x, z) blocks.

    Collapsing the reassembled amplitude at y = x leaves
    ``b_m(x, z) = (D_theta . A_m)(x, x, psi_x(x, z))`` for m >= 1.
    """
    n, D = geom.n, geom.degree
    if D < 2 * chain.M + 2:
        raise DegreeBudgetError(
            f"reconstruction to order {chain.M} needs geometry degree >= {2 * chain.M + 2}",
            2 * chain.M + 2,
        )
    phase = _PhaseChain(geom)
    out = [TruncatedSeries.one(2 * n, D)]
    for m in range(1, chain.M + 1):
        p = _divergence_theta(chain.A[m], n)
        out.append(phase.to_xz(_merge_y_into_x(p, n)))
    return out


def amplitude_order_xyz(geom: GeometryPack, chain: TransportChain, m: int) -> TruncatedSeries:
    """Order-m part of (1 + k (x-y).A + D_theta.A) / Delta0 in (x, y, z) blocks.

    The k-weighted term shifts A_{m+1} down to order m, so this needs the
    chain built through m + 1.  The result must not depend on the y block;
    that is the content of the amplitude being a function of (x, z) alone.
    """
    n = geom.n
    if m + 1 > chain.M:
        raise ValueError(f"order {m} needs the chain through {m + 1}")
    if m == 0:
        p = TruncatedSeries.constant(3 * n, geom.degree - 2, 1)
    else:
        p = _divergence_theta(chain.A[m], n)
    out_degree = p.trunc_degree
    num = p
    for i in range(n):
        xy = TruncatedSeries(
            3 * n,
            1,
            {
                tuple(1 if j == i else 0 for j in range(3 * n)): 1,
                tuple(1 if j == n + i else 0 for j in range(3 * n)): -1,
            },
        )
        num = num + mul_trunc(xy, chain.A[m + 1][i], out_degree)
    inv_delta0 = geom.delta0_xytheta.invert().truncate(out_degree)
    b_xytheta = num * inv_delta0
    ids3 = TruncatedSeries.variables(3 * n, geom.degree - 1)
    args = list(ids3[: 2 * n]) + [t for t in geom.theta]
    return b_xytheta.compose(args)
