"""Solver for the vortex/anti-vortex system (model tag "vav").

With backgrounds subtracted for all four source sets, the smooth remainders
(U, V) satisfy

    Lap(U) =  8 f(u01, u02, U) - 4 f(v01, v02, V) + 4*pi*(N1 - P1)/|S|,
    Lap(V) = -4 f(u01, u02, U) + 4 f(v01, v02, V) + 4*pi*(N2 - P2)/|S|,

where f(s1, s2, t) = (e^{s1+t} - e^{s2})/(e^{s1+t} + e^{s2}), evaluated in
the algebraically identical overflow-proof form tanh((s1 - s2 + t)/2).
Solutions exist iff |a| < 1 and |b| < 1 for the normalized count differences
a, b; integrating the equations pins the integrals of f to a|S| and b|S|.

Two methods are provided. The default is damped Newton on the full fields
(means included; the nonlinearity fixes them). The alternative iterates the
constrained fixed-point map T: the means are carried by explicit shifts
c1, c2 chosen so the integral constraints hold at every iterate, and the
mean-zero parts are updated through inverse Laplacians. Damped Picard on T
is not guaranteed to converge; stagnation is detected and reported.
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import pcg_pair
from .errors import (
    BracketFailure,
    ConfigurationError,
    Inadmissible,
    MaxIterExceeded,
    Stagnation,
)
from .kernels import df_half, f_half
from .sources import (
    FOUR_PI,
    BackgroundSet,
    VortexConfiguration,
    build_backgrounds,
)
from .surface import ScalarField, TorusGeometry, _same_geometry

_ARMIJO_C = 1e-4
_SHIFT_TOL = 1e-12
_SHIFT_BRACKET = 700.0
_MEAN_TOL = 1e-12
# Inverse of the coupling matrix [[8, -4], [-4, 4]]; used to symmetrize the
# Newton systems and to build the preconditioner.
_AINV = ((0.25, 0.25), (0.25, 0.5))


def f_fun(s1, s2, t):
    """(e^{s1+t} - e^{s2})/(e^{s1+t} + e^{s2}) as tanh((s1 - s2 + t)/2).

    Saturates to +-1 at infinite arguments and stays strictly inside
    (-1, 1) for finite ones. Accepts scalars or arrays.
    """
    return np.tanh(0.5 * (np.asarray(s1, dtype=np.float64) - s2 + t))


def f_fun_t(s1, s2, t):
    """Derivative of f_fun in t, (1 - f^2)/2; valued in (0, 1/2]."""
    f = f_fun(s1, s2, t)
    return 0.5 * (1.0 - f * f)


def check_admissibility(config: VortexConfiguration, geom: TorusGeometry):
    """Existence check; returns (a, b) or raises Inadmissible with margins.

    a = -pi*(N1 - P1 + N2 - P2)/|S| and b = -pi*(N1 - P1 + 2(N2 - P2))/|S|;
    a solution exists iff |a| < 1 and |b| < 1.
    """
    N1, P1, N2, P2 = config.counts()
    a = -np.pi * (N1 - P1 + N2 - P2) / geom.area
    b = -np.pi * (N1 - P1 + 2 * (N2 - P2)) / geom.area
    if abs(a) >= 1.0 or abs(b) >= 1.0:
        raise Inadmissible(1.0 - abs(a), 1.0 - abs(b))
    return float(a), float(b)


@dataclass(frozen=True)
class VAVProblem:
    """Geometry, sources, the four backgrounds, and the constants a, b."""

    geometry: TorusGeometry
    config: VortexConfiguration
    backgrounds: BackgroundSet
    a: float
    b: float
    sigma: float


def vav_problem(
    geom: TorusGeometry, config: VortexConfiguration, kappa=2.0
) -> VAVProblem:
    """Build a VAVProblem; the mollifier width is kappa grid cells."""
    a, b = check_admissibility(config, geom)
    sigma = float(kappa) * max(geom.h1, geom.h2)
    return VAVProblem(
        geometry=geom,
        config=config,
        backgrounds=build_backgrounds(geom, config, sigma),
        a=a,
        b=b,
        sigma=sigma,
    )


def _shift(base, target, geom, bracket=_SHIFT_BRACKET):
    """Unique c with quad(tanh((base + c)/2)) = target.

    The map is strictly increasing in c, so bisection on [-bracket, bracket]
    followed by Newton polishing converges; |integral - target| <= 1e-12 at
    the returned c. BracketFailure signals saturated or inadmissible data.
    """

    def g(c):
        return geom.quad(f_half(base + c)) - target

    lo, hi = -bracket, bracket
    g_lo = g(lo)
    g_hi = g(hi)
    if g_lo > 0.0 or g_hi < 0.0:
        raise BracketFailure(
            f"integral does not cross target within |c| <= {bracket:g} "
            f"(g({lo:g}) = {g_lo:.3e}, g({hi:g}) = {g_hi:.3e})"
        )
    c = 0.0
    g_c = g(c)
    for _ in range(30):
        if abs(g_c) <= _SHIFT_TOL:
            return c
        if g_c > 0.0:
            hi = c
        else:
            lo = c
        c = 0.5 * (lo + hi)
        g_c = g(c)
    for _ in range(60):
        if abs(g_c) <= _SHIFT_TOL:
            return c
        if g_c > 0.0:
            hi = c
        else:
            lo = c
        dg = geom.quad(df_half(base + c))
        c_new = c - g_c / dg if dg > 0.0 else 0.5 * (lo + hi)
        if not (lo < c_new < hi):
            c_new = 0.5 * (lo + hi)
        c = c_new
        g_c = g(c)
    if abs(g_c) <= 1e-9:
        return c
    raise BracketFailure(f"shift residual stalled at {g_c:.3e}")


def constraint_shift(
    W: ScalarField, s1: ScalarField, s2: ScalarField, target, geom: TorusGeometry
) -> float:
    """The unique c with integrate(f_fun(s1, s2, W + c)) = target."""
    _same_geometry(W, s1, s2)
    return _shift(s1.values - s2.values + W.values, float(target), geom)


class _Work:
    """Precomputed arrays and array-level operations for one problem."""

    def __init__(self, problem: VAVProblem):
        self.geom = problem.geometry
        bg = problem.backgrounds
        self.du = bg.u01.values - bg.u02.values
        self.dv = bg.v01.values - bg.v02.values
        self.a = problem.a
        self.b = problem.b
        N1, P1, N2, P2 = problem.config.counts()
        self.c1 = FOUR_PI * (N1 - P1) / self.geom.area
        self.c2 = FOUR_PI * (N2 - P2) / self.geom.area

    def f_pair(self, U, V):
        return f_half(self.du + U), f_half(self.dv + V)

    def residual(self, U, V, fu, fv):
        l1, l2 = self.geom.lap_pair(U, V)
        r1 = l1 - (8.0 * fu - 4.0 * fv + self.c1)
        r2 = l2 - (-4.0 * fu + 4.0 * fv + self.c2)
        return r1, r2

    def rhs_shifted(self, fu, fv):
        """Right-hand sides of the constrained map; zero-mean by the shifts."""
        r1 = 8.0 * (fu - self.a) - 4.0 * (fv - self.b)
        r2 = -4.0 * (fu - self.a) + 4.0 * (fv - self.b)
        return r1, r2

    def jacobian_apply(self, d1_diag, d2_diag):
        (i11, i12), (i21, i22) = _AINV

        def apply_op(p1, p2):
            l1, l2 = self.geom.lap_pair(p1, p2)
            return (
                -(i11 * l1 + i12 * l2) + d1_diag * p1,
                -(i21 * l1 + i22 * l2) + d2_diag * p2,
            )

        return apply_op

    def precondition(self, r1, r2):
        p1 = 8.0 * r1 - 4.0 * r2
        p2 = -4.0 * r1 + 4.0 * r2
        return self.geom.helmholtz_pair(p1, p2, 0.25)


def apply_T(U: ScalarField, V: ScalarField, problem: VAVProblem):
    """One application of the constrained fixed-point map.

    Computes the shifts c1, c2 restoring the integral constraints, forms the
    (zero-mean) shifted right-hand sides, and returns their inverse-Laplacian
    images as mean-zero fields.
    """
    _same_geometry(U, V, problem.backgrounds.u01)
    work = _Work(problem)
    t1, t2, _, _ = _apply_T_arrays(work, U.values, V.values, problem)
    geom = problem.geometry
    return geom.field(t1), geom.field(t2)


def _apply_T_arrays(work, U, V, problem):
    geom = work.geom
    c1 = _shift(work.du + U, problem.a * geom.area, geom)
    c2 = _shift(work.dv + V, problem.b * geom.area, geom)
    fu = f_half(work.du + U + c1)
    fv = f_half(work.dv + V + c2)
    r1, r2 = work.rhs_shifted(fu, fv)
    t1, t2 = geom.inv_lap_pair_projected(r1, r2)
    return t1, t2, c1, c2


@dataclass
class VAVSolution:
    """Converged fields and the solve record.

    The shifts are folded into U and V; c1, c2 record their final values in
    fixed-point mode (zero when Newton absorbs the means). u and v are the
    full log-fields u01 - u02 + U and v01 - v02 + V.
    """

    U: ScalarField
    V: ScalarField
    u: ScalarField
    v: ScalarField
    c1: float
    c2: float
    iterations: int
    final_residual: float
    trace: list
    method: str


def _package(problem, work, U, V, c1, c2, it, r_sup, trace, method):
    geom = problem.geometry
    return VAVSolution(
        U=geom.field(U),
        V=geom.field(V),
        u=geom.field(work.du + U),
        v=geom.field(work.dv + V),
        c1=c1,
        c2=c2,
        iterations=it,
        final_residual=r_sup,
        trace=trace,
        method=method,
    )


def _solve_newton(problem, work, tol, max_iter, x0):
    geom = work.geom
    shape = (geom.n1, geom.n2)
    if x0 is None:
        U = np.zeros(shape)
        V = np.zeros(shape)
    else:
        U = np.array(x0[0], dtype=np.float64, copy=True)
        V = np.array(x0[1], dtype=np.float64, copy=True)
        if U.shape != shape or V.shape != shape:
            raise ConfigurationError("x0 arrays do not match the grid")
    trace = []
    it = 0
    step = 0.0
    kind = "init"
    while True:
        fu, fv = work.f_pair(U, V)
        r1, r2 = work.residual(U, V, fu, fv)
        r_sup = max(float(np.abs(r1).max()), float(np.abs(r2).max()))
        phi = geom.quad(r1 * r1 + r2 * r2)
        m_abs = max(
            abs(geom.quad(fu) - work.a * geom.area),
            abs(geom.quad(fv) - work.b * geom.area),
        )
        trace.append(
            {"iter": it, "resid_sup": r_sup, "phi": phi, "step": step, "kind": kind}
        )
        if r_sup < tol and m_abs <= _MEAN_TOL:
            break
        if it >= max_iter:
            raise MaxIterExceeded(
                f"no convergence in {max_iter} iterations "
                f"(residual sup {r_sup:.3e}, tol {tol:.1e})",
                trace,
            )
        if r_sup < tol:
            # fold the exact constraint shifts into the means
            U = U + _shift(work.du + U, work.a * geom.area, geom)
            V = V + _shift(work.dv + V, work.b * geom.area, geom)
            it += 1
            step = 0.0
            kind = "polish"
            continue

        d1_diag = df_half(work.du + U)
        d2_diag = df_half(work.dv + V)
        (i11, i12), (i21, i22) = _AINV
        b1 = i11 * r1 + i12 * r2
        b2 = i21 * r1 + i22 * r2
        eta = min(0.1, np.sqrt(r_sup))
        dU, dV, _ = pcg_pair(
            work.jacobian_apply(d1_diag, d2_diag),
            work.precondition,
            b1,
            b2,
            rtol=eta,
        )
        t = 1.0
        accepted = False
        for _ in range(40):
            fu_t, fv_t = work.f_pair(U + t * dU, V + t * dV)
            r1_t, r2_t = work.residual(U + t * dU, V + t * dV, fu_t, fv_t)
            if geom.quad(r1_t * r1_t + r2_t * r2_t) <= (1.0 - 2.0 * _ARMIJO_C * t) * phi:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            raise MaxIterExceeded("residual line search failed to descend", trace)
        U = U + t * dU
        V = V + t * dV
        it += 1
        step = t
        kind = "newton"
    return _package(problem, work, U, V, 0.0, 0.0, it, r_sup, trace, "newton")


def _solve_fixed_point(problem, work, tol, max_iter, omega, x0):
    geom = work.geom
    shape = (geom.n1, geom.n2)
    if x0 is None:
        Up = np.zeros(shape)
        Vp = np.zeros(shape)
    else:
        Up = np.array(x0[0], dtype=np.float64, copy=True)
        Vp = np.array(x0[1], dtype=np.float64, copy=True)
        Up -= Up.mean()
        Vp -= Vp.mean()
    trace = []
    history = []
    it = 0
    while True:
        c1 = _shift(work.du + Up, problem.a * geom.area, geom)
        c2 = _shift(work.dv + Vp, problem.b * geom.area, geom)
        fu = f_half(work.du + Up + c1)
        fv = f_half(work.dv + Vp + c2)
        rhs1, rhs2 = work.rhs_shifted(fu, fv)
        l1, l2 = geom.lap_pair(Up, Vp)
        r_sup = max(
            float(np.abs(l1 - rhs1).max()), float(np.abs(l2 - rhs2).max())
        )
        history.append(r_sup)
        trace.append({"iter": it, "resid_sup": r_sup, "c1": c1, "c2": c2})
        if r_sup < tol:
            return _package(
                problem, work, Up + c1, Vp + c2, c1, c2, it, r_sup, trace,
                "fixed_point",
            )
        if it >= 50 and r_sup > (1.0 - 1e-3) * history[it - 50]:
            raise Stagnation(
                f"fixed-point residual stuck near {r_sup:.3e} after {it} "
                "iterations; the damped iteration is not contracting here",
                trace,
            )
        if it >= max_iter:
            raise MaxIterExceeded(
                f"no convergence in {max_iter} iterations "
                f"(residual sup {r_sup:.3e}, tol {tol:.1e})",
                trace,
            )
        # Damped update applied componentwise: the second component sees the
        # first component's fresh value. The simultaneous variant loses
        # contraction at noticeably smaller areas.
        t1 = geom.inv_lap_projected(rhs1)
        Up = (1.0 - omega) * Up + omega * t1
        c1_new = _shift(work.du + Up, problem.a * geom.area, geom)
        fu_new = f_half(work.du + Up + c1_new)
        rhs2_new = -4.0 * (fu_new - work.a) + 4.0 * (fv - work.b)
        t2 = geom.inv_lap_projected(rhs2_new)
        Vp = (1.0 - omega) * Vp + omega * t2
        it += 1


def solve_vav(
    problem: VAVProblem,
    *,
    tol=1e-8,
    max_iter=None,
    method="newton",
    omega=0.5,
    x0=None,
) -> VAVSolution:
    """Solve the vortex/anti-vortex system.

    method="newton" (default): damped Newton over the full fields with the
    symmetrized inner system solved by preconditioned CG and a line search
    on the squared residual norm. method="fixed_point": damped Picard on the
    constrained map applied componentwise (each component's update sees the
    fresh values of the ones before it), relaxation factor `omega`; raises
    Stagnation if the residual stops decreasing (reduction below 1e-3 over
    50 iterations). The map is not a contraction on large tori, so stagnation
    is an expected reportable outcome there, not a bug.
    Both methods return sup-norm residual of the governing system below `tol`.
    """
    work = _Work(problem)
    if method == "newton":
        return _solve_newton(problem, work, tol, 50 if max_iter is None else max_iter, x0)
    if method == "fixed_point":
        return _solve_fixed_point(
            problem, work, tol, 2000 if max_iter is None else max_iter, omega, x0
        )
    raise ConfigurationError(f"unknown method {method!r}")


def vav_quantized_integrals(sol: VAVSolution, problem: VAVProblem):
    """The two count-quantized integrals of the solved fields.

    Iu = integral of (1 - e^u)/(1 + e^u) = pi*(N1 - P1 + N2 - P2) and
    Iv analogously with pi*(N1 - P1 + 2*(N2 - P2)); both evaluated in the
    tanh form and pinned by the counts alone.
    """
    geom = problem.geometry
    iu = -geom.quad(f_half(sol.u.values))
    iv = -geom.quad(f_half(sol.v.values))
    return {"Iu": iu, "Iv": iv}
