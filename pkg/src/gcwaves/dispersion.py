"""Linear dispersion analysis for the two-layer gravity-capillary problem.

The linearised problem couples an interface elevation and a surface
elevation through a 2x2 generalised eigenvalue problem

    (P(k) - nu^2 F(k)) v = 0,

whose smaller eigenvalue branch ``lambda_minus`` carries the slow waves.
This module evaluates the matrices, the closed-form eigenvalue branches,
locates and classifies the global minimum of the slow branch, and computes
the eigen-data (k0, nu0, v0 = (1, -a), lambda''(k0), A2) consumed by the
rest of the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, RangeError, NumericalError

# Beyond this |k| the hyperbolic corrections coth|k|-1 and |k|/sinh|k|
# are below double precision (< 1e-25), while sinh itself overflows
# near 710.  Evaluate the asymptotic branch instead.
_K_HYPERBOLIC_CUTOFF = 30.0

#: relative tolerance of the golden-section refinement of k0
K0_REL_TOL = 1e-12

#: two local minima closer than this (in lambda_minus value) count as tied
DOUBLE_MIN_TOL = 1e-9

#: lambda''(k0) below 1e-6 * lambda_minus(k0) / k0^2 counts as degenerate
DEGENERACY_FACTOR = 1e-6


@dataclass(frozen=True)
class Params:
    """Dimensionless physical parameters of a two-layer configuration.

    Attributes
    ----------
    rho : float
        Density ratio (upper over lower), in (0, 1).
    beta_under : float
        Interfacial-tension coefficient, positive.
    beta_over : float
        Surface-tension coefficient, positive.
    """

    rho: float
    beta_under: float
    beta_over: float

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ConfigError(f"rho must lie in (0, 1), got {self.rho}")
        if self.beta_under <= 0.0 or self.beta_over <= 0.0:
            raise ConfigError(
                "surface/interfacial tension coefficients must be positive, "
                f"got beta_under={self.beta_under}, beta_over={self.beta_over}"
            )


@dataclass(frozen=True)
class CriticalPoint:
    """Slow-branch minimum data."""

    k0: float
    nu0: float
    a: float
    lambda2: float  # second derivative of lambda_minus at k0
    a2: float       # NLS dispersive coefficient
    assumption1_global: bool
    assumption1_nondeg: bool

    @property
    def v0(self) -> np.ndarray:
        return np.array([1.0, -self.a])


@dataclass(frozen=True)
class AssumptionReport:
    crit: CriticalPoint
    competing_minima: list = field(default_factory=list)
    verdict: str = "Valid"  # one of Valid, DoubleMinimum, Degenerate


def _hyperbolics(ak: float):
    """Return (tanh, coth, 1/sinh, 1/cosh^2) at ak = |k| with overflow guard."""
    if ak > _K_HYPERBOLIC_CUTOFF:
        return 1.0, 1.0, 0.0, 0.0
    t = math.tanh(ak)
    s = math.sinh(ak)
    return t, 1.0 / t, 1.0 / s, 1.0 / math.cosh(ak) ** 2


def eval_PF(k: float, p: Params):
    """Evaluate the dispersion matrices P(k) and F(k) for k != 0.

    P is diagonal with entries 1 - rho + beta_under k^2 and
    rho (1 + beta_over k^2); F carries the hyperbolic depth factors.
    Both are symmetric 2x2 arrays.
    """
    if k == 0.0:
        raise RangeError("P/F are evaluated for k != 0 (F(0) is singular)")
    ak = abs(k)
    _, coth, inv_sinh, _ = _hyperbolics(ak)
    P = np.array([
        [1.0 - p.rho + p.beta_under * ak**2, 0.0],
        [0.0, p.rho * (1.0 + p.beta_over * ak**2)],
    ])
    F = np.array([
        [ak + p.rho * ak * coth, -p.rho * ak * inv_sinh],
        [-p.rho * ak * inv_sinh, p.rho * ak * coth],
    ])
    if not (np.isfinite(P).all() and np.isfinite(F).all()):
        raise RangeError(f"P/F overflowed at k={k}")
    return P, F


def eval_lambda(k: float, p: Params):
    """Closed-form slow/fast eigenvalues of F(k)^{-1} P(k).

    Returns
    -------
    (lambda_minus, lambda_plus, D) : tuple of float
        The two branches and the (positive) discriminant.
    """
    if k == 0.0:
        raise RangeError("eigenvalues are evaluated for k != 0")
    ak = abs(k)
    t, _, _, inv_cosh2 = _hyperbolics(ak)
    p1 = 1.0 - p.rho + p.beta_under * ak**2
    q = 1.0 + p.beta_over * ak**2
    x = p1 - (t + p.rho) * q
    D = x * x + 4.0 * p.rho * inv_cosh2 * p1 * q
    denom = 2.0 * ak * (1.0 + p.rho * t)
    mean = (p1 + q * (t + p.rho)) / denom
    half = math.sqrt(D) / denom
    if not math.isfinite(mean + half):
        raise RangeError(f"eigenvalue evaluation overflowed at k={k}")
    return mean - half, mean + half, D


def lambda_minus_grid(ks: np.ndarray, p: Params) -> np.ndarray:
    return np.array([eval_lambda(k, p)[0] for k in ks])


def eval_g(k: float, p: Params, nu0: float) -> np.ndarray:
    """g(k) = P(k) - nu0^2 F(k); symmetric, singular exactly at k = +-k0."""
    P, F = eval_PF(k, p)
    return P - nu0**2 * F


def g_at_zero(p: Params, nu0: float) -> np.ndarray:
    """Analytic k->0 limit of g.

    F(k) -> rho * [[1, -1], [-1, 1]] as k -> 0, so the limit is finite even
    though F itself is singular there.
    """
    r, n2 = p.rho, nu0**2
    return np.array([
        [1.0 - r - r * n2, r * n2],
        [r * n2, r - r * n2],
    ])


def eval_a(p: Params, k0: float) -> float:
    """Second eigenvector component at the slow-branch minimum.

    v0 = (1, -a) spans the kernel of g(k0).  Evaluated in the rationalised
    form a = 2 p1 / (cosh(k0) (sqrt(D) - x)), which is algebraically equal
    to the textbook display but avoids the catastrophic cancellation of
    x + sqrt(D) when x < 0.  Always positive.
    """
    if k0 <= 0.0:
        raise RangeError("k0 must be positive")
    if k0 > _K_HYPERBOLIC_CUTOFF:
        raise RangeError(
            f"closed-form a is ill-conditioned for k0={k0} > {_K_HYPERBOLIC_CUTOFF}"
        )
    t = math.tanh(k0)
    p1 = 1.0 - p.rho + p.beta_under * k0**2
    q = 1.0 + p.beta_over * k0**2
    x = p1 - (t + p.rho) * q
    _, _, D = eval_lambda(k0, p)
    return 2.0 * p1 / (math.cosh(k0) * (math.sqrt(D) - x))


def _richardson_second_derivative(f, x0: float, h: float):
    """Sixth-order Richardson-extrapolated central second derivative.

    Returns (value, error_estimate); raises if the extrapolation sequence
    does not contract.
    """
    def d2(h_):
        return (f(x0 + h_) - 2.0 * f(x0) + f(x0 - h_)) / h_**2

    d_h, d_h2, d_h4 = d2(h), d2(h / 2.0), d2(h / 4.0)
    r1 = (4.0 * d_h2 - d_h) / 3.0
    r2 = (4.0 * d_h4 - d_h2) / 3.0
    value = (16.0 * r2 - r1) / 15.0
    err = abs(r2 - r1)
    scale = max(abs(value), abs(d_h), 1e-300)
    if err > 0.5 * scale and abs(d_h - d_h2) < abs(d_h2 - d_h4):
        raise NumericalError(
            f"Richardson second-derivative sequence diverges at x0={x0}"
        )
    return value, err


def eval_a2(p: Params, k0: float, nu0: float, a: float) -> float:
    """A2 = d^2/dk^2 [g(k) v0 . v0] at k0, by Richardson central differences."""
    v0 = np.array([1.0, -a])

    def quad_form(k):
        return float(eval_g(k, p, nu0) @ v0 @ v0)

    value, _ = _richardson_second_derivative(quad_form, k0, 1e-3 * k0)
    return value


def lambda2_at(p: Params, k0: float) -> float:
    """lambda_minus''(k0) by Richardson central differences."""
    value, _ = _richardson_second_derivative(
        lambda k: eval_lambda(k, p)[0], k0, 1e-3 * k0
    )
    return value


def _golden_refine(f, a: float, b: float, c: float, rel_tol: float):
    """Golden-section minimisation of f given a bracket a < b < c, f(b) lowest."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    fb = f(b)
    while (c - a) > rel_tol * b:
        if (b - a) > (c - b):
            x = b - (1.0 - invphi) * (b - a)
        else:
            x = b + (1.0 - invphi) * (c - b)
        fx = f(x)
        if fx < fb:
            if x < b:
                c, b, fb = b, x, fx
            else:
                a, b, fb = b, x, fx
        else:
            if x < b:
                a = x
            else:
                c = x
    return b, fb


def find_critical(
    p: Params,
    k_min: float = 1e-3,
    k_max: float = 1e3,
    samples: int = 4096,
    k0_rel_tol: float = K0_REL_TOL,
) -> AssumptionReport:
    """Locate and classify the global minimum of the slow branch.

    Dense log-spaced scan followed by golden-section refinement of every
    local minimum; the global one fills a CriticalPoint, the others are
    screened for near-ties (double minima).  Deterministic for fixed inputs.
    """
    ks = np.geomspace(k_min, k_max, samples)
    lam = lambda_minus_grid(ks, p)

    def f(k):
        return eval_lambda(k, p)[0]

    interior = np.arange(1, samples - 1)
    is_min = (lam[interior] < lam[interior - 1]) & (lam[interior] <= lam[interior + 1])
    idxs = interior[is_min]
    if len(idxs) == 0 or lam.argmin() in (0, samples - 1):
        raise ConfigError(
            "no interior minimum of lambda_minus in the scan window "
            f"[{k_min}, {k_max}]; widen the window"
        )

    minima = []
    for i in idxs:
        k_star, lam_star = _golden_refine(f, ks[i - 1], ks[i], ks[i + 1],
                                          k0_rel_tol)
        minima.append((k_star, lam_star))
    minima.sort(key=lambda t: t[1])
    k0, lam0 = minima[0]

    # A near-degenerate basin is numerically flat, so refinement of adjacent
    # scan minima can land on near-tied points right next to k0; only count
    # competitors well separated in wavenumber (factor > e^0.35 ~ 1.42).
    competing = [
        (k, v) for k, v in minima[1:]
        if abs(v - lam0) <= DOUBLE_MIN_TOL and abs(math.log(k / k0)) > 0.35
    ]

    nu0 = math.sqrt(lam0)
    a = eval_a(p, k0)
    lam2 = lambda2_at(p, k0)
    a2 = eval_a2(p, k0, nu0, a)

    nondeg = lam2 > DEGENERACY_FACTOR * lam0 / k0**2
    global_ok = not competing
    crit = CriticalPoint(
        k0=k0, nu0=nu0, a=a, lambda2=lam2, a2=a2,
        assumption1_global=global_ok, assumption1_nondeg=nondeg,
    )
    if not global_ok:
        verdict = "DoubleMinimum"
    elif not nondeg:
        verdict = "Degenerate"
    else:
        verdict = "Valid"
    return AssumptionReport(crit=crit, competing_minima=competing, verdict=verdict)


def asymptotic_slopes(p: Params):
    """Large-k slopes of lambda_-/|k| and lambda_+/|k|."""
    s = p.beta_under + (1.0 + p.rho) * p.beta_over
    d = abs(p.beta_under - (1.0 + p.rho) * p.beta_over)
    return (s - d) / (2.0 * (1.0 + p.rho)), (s + d) / (2.0 * (1.0 + p.rho))


def locate_branch_crossing(
    rho: float,
    beta_under: float,
    beta_lo: float,
    beta_hi: float,
    width: float = 1e-12,
    **scan_kwargs,
):
    """Bracket the beta_over value where the global slow-branch minimum jumps.

    Between beta_lo and beta_hi the argmin k0(beta_over) must jump between
    two separated wavenumber branches; bisection on which branch wins
    shrinks the bracket below ``width``.  Returns (lo, hi, report_at_mid).
    """
    def argmin_k(beta_over):
        rep = find_critical(Params(rho, beta_under, beta_over), **scan_kwargs)
        return rep.crit.k0, rep

    k_lo, _ = argmin_k(beta_lo)
    k_hi, _ = argmin_k(beta_hi)
    if abs(math.log(k_hi / k_lo)) < 0.5:
        raise ConfigError(
            "endpoints select the same minimum branch; no crossing "
            f"in [{beta_lo}, {beta_hi}]"
        )
    lo, hi = beta_lo, beta_hi
    rep_mid = None
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        k_mid, rep_mid = argmin_k(mid)
        if abs(math.log(k_mid / k_lo)) < abs(math.log(k_mid / k_hi)):
            lo = mid
        else:
            hi = mid
    return lo, hi, rep_mid


def refine_degenerate(p0: Params, k_guess: float = 1.0, tol: float = 3e-9):
    """Polish (rho, beta_under, beta_over) to a degenerate slow-branch minimum.

    Newton iteration on (lambda'(k*), lambda''(k*), lambda'''(k*)) = 0 at
    k* = k_guess with a finite-difference Jacobian.  Used to reproduce the
    degenerate-dispersion regime from coarsely rounded parameter values.
    The stopping tolerance sits just above the roundoff floor of the
    third-derivative stencil.
    """
    k = k_guess

    def derivs(q: Params):
        # fourth-order stencils: the minimum location is quartically flat,
        # so second-order differences are not accurate enough to pin it
        h = 3e-3 * k
        v = np.array([eval_lambda(k + j * h, q)[0] for j in range(-3, 4)])
        d1 = (-v[5] + 8 * v[4] - 8 * v[2] + v[1]) / (12 * h)
        d2 = (-v[5] + 16 * v[4] - 30 * v[3] + 16 * v[2] - v[1]) / (12 * h**2)
        d3 = (v[6] - 8 * v[5] + 13 * v[4] - 13 * v[2] + 8 * v[1] - v[0]) / (8 * h**3)
        return np.array([d1, d2, d3])

    x = np.array([p0.rho, p0.beta_under, p0.beta_over])
    best_x, best_r = x, np.inf
    stale = 0
    for _ in range(40):
        q = Params(*x)
        r = derivs(q)
        rnorm = float(np.max(np.abs(r)))
        if rnorm < best_r:
            best_x, best_r, stale = x, rnorm, 0
        else:
            stale += 1
        if best_r < tol or stale >= 3:
            break
        J = np.empty((3, 3))
        for j in range(3):
            dx = 1e-6 * max(abs(x[j]), 1e-3)
            xp = x.copy(); xp[j] += dx
            xm = x.copy(); xm[j] -= dx
            J[:, j] = (derivs(Params(*xp)) - derivs(Params(*xm))) / (2 * dx)
        step = np.linalg.solve(J, r)
        # Damp steps so the parameters stay admissible.
        lam = 1.0
        while True:
            xn = x - lam * step
            if 0 < xn[0] < 1 and xn[1] > 0 and xn[2] > 0:
                break
            lam /= 2.0
            if lam < 1e-6:
                raise NumericalError("degenerate refinement left the admissible set")
        x = xn
    if best_r > 100 * tol:
        raise NumericalError(
            f"degenerate refinement stalled at residual {best_r:.3e}"
        )
    return Params(*best_x)
