"""Periodic spectral grids and the truncated wave functionals.

Everything here lives on a uniform periodic grid whose length is an
integer number of carrier wavelengths.  Fourier-multiplier operators are
applied by FFT conjugation; pointwise products entering cubic/quartic
integrands are formed on a 2x zero-padded grid, which makes every
quadratic, cubic and quartic integral alias-free for Nyquist-free inputs
and every gradient field exact after projection back to the grid band.

The functionals are the quadratic/cubic/quartic truncations of the
surface energy K and the kinetic energy L of the two-layer problem,
together with the reduced objective J_mu = K + mu^2 / L_trunc and its
L^2 gradient, and the modulated-carrier test profile used to seed the
minimiser.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dispersion import CriticalPoint, Params, eval_g, g_at_zero
from .errors import ConfigError, GeometryError, OutOfConeError, RangeError
from .nls import NlsCoefficients, soliton_shape

_PAD = 2


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform periodic grid of n samples on [-period/2, period/2)."""

    n: int
    period: float
    k0_multiple: int | None = None

    def __post_init__(self):
        if not _is_power_of_two(self.n) or self.n < 16:
            raise ConfigError(f"n must be a power of two >= 16, got {self.n}")
        if self.period <= 0.0:
            raise ConfigError("period must be positive")

    @cached_property
    def dx(self) -> float:
        return self.period / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return -0.5 * self.period + self.dx * np.arange(self.n)

    @cached_property
    def k(self) -> np.ndarray:
        """Non-negative rfft wavenumbers 2 pi j / period, j = 0..n/2."""
        return 2.0 * np.pi / self.period * np.arange(self.n // 2 + 1)

    @cached_property
    def k_pad(self) -> np.ndarray:
        return 2.0 * np.pi / self.period * np.arange(_PAD * self.n // 2 + 1)

    @property
    def carrier(self) -> float:
        """The grid-exact carrier wavenumber 2 pi k0_multiple / period."""
        if self.k0_multiple is None:
            raise ConfigError("grid was built without a carrier multiple")
        return 2.0 * np.pi * self.k0_multiple / self.period


def make_grid(n: int, k0: float, multiples: int) -> PeriodicGrid:
    """Grid whose period is an exact integer number of carrier wavelengths."""
    if multiples < 1:
        raise ConfigError("need at least one carrier wavelength in the period")
    return PeriodicGrid(n=n, period=2.0 * np.pi * multiples / k0,
                        k0_multiple=multiples)


def _fbar_entries(k: np.ndarray):
    """Vectorised upper-layer multiplier symbols (diag, offdiag) over k >= 0."""
    ak = np.abs(k)
    diag = np.ones_like(ak)
    off = -np.ones_like(ak)
    pos = ak > 0
    small = pos & (ak <= 30.0)
    diag[small] = ak[small] / np.tanh(ak[small])
    off[small] = -ak[small] / np.sinh(ak[small])
    big = ak > 30.0
    diag[big] = ak[big]
    off[big] = 0.0
    return diag, off


def _fbar_inverse_entries(k: np.ndarray):
    """Symbols of the inverse upper-layer matrix multiplier.

    The inverse matrix is [[coth|k|, 1/sinh|k|], [1/sinh|k|, coth|k|]]/|k|.
    It is singular at k = 0 on vectors (1, 1); fields it acts on here have
    zero-sum zero modes, where the limit acts as the projection
    [[1, -1], [-1, 1]]/4.
    """
    ak = np.abs(k)
    diag = np.full_like(ak, 0.25)
    off = np.full_like(ak, -0.25)
    pos = ak > 0
    small = pos & (ak <= 30.0)
    diag[small] = 1.0 / (np.tanh(ak[small]) * ak[small])
    off[small] = 1.0 / (np.sinh(ak[small]) * ak[small])
    big = ak > 30.0
    diag[big] = 1.0 / ak[big]
    off[big] = 0.0
    return diag, off


class _Symbols:
    """Per-grid symbol arrays on both the base and the padded band."""

    def __init__(self, grid: PeriodicGrid):
        self.grid = grid
        for name, k in (("", grid.k), ("_pad", grid.k_pad)):
            absk = np.abs(k)
            fb_d, fb_o = _fbar_entries(k)
            nb_d, nb_o = _fbar_inverse_entries(k)
            setattr(self, "absk" + name, absk)
            setattr(self, "fb_diag" + name, fb_d)
            setattr(self, "fb_off" + name, fb_o)
            setattr(self, "nb_diag" + name, nb_d)
            setattr(self, "nb_off" + name, nb_o)
            setattr(self, "ik" + name, 1j * k)
            setattr(self, "mk2" + name, -(k**2))


_symbol_cache: dict[tuple[int, float], _Symbols] = {}


def _symbols(grid: PeriodicGrid) -> _Symbols:
    key = (grid.n, grid.period)
    sym = _symbol_cache.get(key)
    if sym is None:
        sym = _symbol_cache[key] = _Symbols(grid)
    return sym


def _clean(U: np.ndarray, n: int) -> np.ndarray:
    U[n // 2] = 0.0
    return U


def _rfft(u: np.ndarray, n: int) -> np.ndarray:
    return _clean(np.fft.rfft(u), n)


def _pad_values(U: np.ndarray, n: int) -> np.ndarray:
    """Trig-interpolate rfft coefficients of the n-grid onto the padded grid."""
    Up = np.zeros(_PAD * n // 2 + 1, dtype=complex)
    Up[: n // 2 + 1] = U
    return np.fft.irfft(Up, _PAD * n) * _PAD


def _truncate_values(w: np.ndarray, n: int) -> np.ndarray:
    """Project padded-grid values back onto the n-grid band (values on n-grid)."""
    W = np.fft.rfft(w)
    U = W[: n // 2 + 1] / _PAD
    return np.fft.irfft(_clean(U, n), n)


def apply_multiplier(symbol, f, grid: PeriodicGrid):
    """Apply a Fourier multiplier; ``symbol`` maps wavenumbers to scalars
    or 2x2 matrices.

    Scalar symbols act on a single grid function; matrix symbols act on a
    (u, v) pair.  The symbol is evaluated on the non-negative wavenumbers
    of the grid (symbols are even functions of k throughout this problem).
    """
    k = grid.k
    if isinstance(f, tuple):
        S = np.array([symbol(kk) for kk in k])  # (n/2+1, 2, 2)
        U = _rfft(f[0], grid.n)
        V = _rfft(f[1], grid.n)
        out_u = np.fft.irfft(S[:, 0, 0] * U + S[:, 0, 1] * V, grid.n)
        out_v = np.fft.irfft(S[:, 1, 0] * U + S[:, 1, 1] * V, grid.n)
        return out_u, out_v
    s = np.array([symbol(kk) for kk in k])
    return np.fft.irfft(s * _rfft(f, grid.n), grid.n)


@dataclass
class ProfilePair:
    """Interface and surface elevations on a shared periodic grid."""

    grid: PeriodicGrid
    eta_under: np.ndarray
    eta_over: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        if self.eta_under.shape != (n,) or self.eta_over.shape != (n,):
            raise ConfigError("profile arrays must match the grid size")

    def copy(self) -> "ProfilePair":
        return ProfilePair(self.grid, self.eta_under.copy(), self.eta_over.copy())

    def roll(self, shift: int) -> "ProfilePair":
        return ProfilePair(self.grid, np.roll(self.eta_under, shift),
                           np.roll(self.eta_over, shift))

    def h2_norm(self) -> float:
        """Discrete H^2 norm sqrt(int eta^2 + eta_x^2 + eta_xx^2) of the pair."""
        sym = _symbols(self.grid)
        w = 1.0 + sym.absk**2 + sym.absk**4
        # rfft coefficient -> line-spectrum weights (count +-k once each)
        mult = np.full(self.grid.n // 2 + 1, 2.0)
        mult[0] = 1.0
        total = 0.0
        for comp in (self.eta_under, self.eta_over):
            U = _rfft(comp, self.grid.n) / self.grid.n
            total += float(np.sum(mult * w * np.abs(U) ** 2)) * self.grid.period
        return math.sqrt(total)


def zero_profile(grid: PeriodicGrid) -> ProfilePair:
    return ProfilePair(grid, np.zeros(grid.n), np.zeros(grid.n))


@dataclass(frozen=True)
class FunctionalBreakdown:
    k_total: float
    k2: float
    k4: float
    l2: float
    l3: float
    l4: float
    l_trunc: float
    j_mu: float
    mu: float


class _Fields:
    """All spectral fields of one profile needed by the functionals.

    Base-band fields are stored as padded-grid values so products can be
    formed directly; inner multiplier applications happen on the padded
    spectrum (exact for products of two base-band fields).
    """

    def __init__(self, eta: ProfilePair):
        g = eta.grid
        self.grid = g
        self.sym = _symbols(g)
        n = g.n
        self.U = _rfft(eta.eta_under, n)
        self.V = _rfft(eta.eta_over, n)
        s = self.sym
        self.u = _pad_values(self.U, n)
        self.v = _pad_values(self.V, n)
        self.ux = _pad_values(s.ik * self.U, n)
        self.vx = _pad_values(s.ik * self.V, n)
        self.uxx = _pad_values(s.mk2 * self.U, n)
        self.vxx = _pad_values(s.mk2 * self.V, n)
        self.Ku = _pad_values(s.absk * self.U, n)
        self.B1 = _pad_values(s.fb_diag * self.U + s.fb_off * self.V, n)
        self.B2 = _pad_values(s.fb_off * self.U + s.fb_diag * self.V, n)

    def integral(self, w: np.ndarray) -> float:
        return float(np.mean(w)) * self.grid.period

    def mult_pad(self, which: str, w: np.ndarray) -> np.ndarray:
        """Apply a scalar multiplier on the padded grid."""
        s = getattr(self.sym, which + "_pad")
        return np.fft.irfft(s * np.fft.rfft(w), _PAD * self.grid.n)

    def nbar_pad(self, w1: np.ndarray, w2: np.ndarray):
        """Apply the inverse upper-layer matrix multiplier on the padded grid."""
        W1, W2 = np.fft.rfft(w1), np.fft.rfft(w2)
        d, o = self.sym.nb_diag_pad, self.sym.nb_off_pad
        npad = _PAD * self.grid.n
        return (np.fft.irfft(d * W1 + o * W2, npad),
                np.fft.irfft(o * W1 + d * W2, npad))

    def upper_quartic_fields(self):
        """Quadratic building blocks of the upper-layer quartic term."""
        if not hasattr(self, "_uq"):
            mp = self.mult_pad
            r1 = self.u * self.ux
            r2 = self.v * self.vx
            w1 = -mp("fb_diag", r1) - mp("fb_off", r2) + mp("ik", self.u * self.B1)
            w2 = -mp("fb_off", r1) - mp("fb_diag", r2) + mp("ik", self.v * self.B2)
            z1, z2 = self.nbar_pad(w1, w2)
            self._uq = (r1, r2, w1, w2, z1, z2)
        return self._uq


def _lower_parts(f: _Fields):
    u, ux, uxx, Ku = f.u, f.ux, f.uxx, f.Ku
    l2 = 0.5 * f.integral(u * Ku)
    l3 = 0.5 * f.integral((ux**2 - Ku**2) * u)
    KuKu = f.mult_pad("absk", u * Ku)
    l4 = 0.5 * f.integral(u**2 * uxx * Ku + u * Ku * KuKu)
    return l2, l3, l4


def _upper_parts(f: _Fields):
    """Upper-layer truncation.

    The quartic term comes from second-order perturbation theory of the
    strip Neumann-Dirichlet map,

        l4 = 1/2 int N0 W . W
             - 1/2 int [r1 K11 r1 + 2 r1 K12 r2 + r2 K22 r2]
             + 1/2 int [B1' u^2 u_x + B2' v^2 v_x],

    with r1 = u u_x, r2 = v v_x and W the first-order flux correction;
    the same derivation specialised to one boundary reproduces the
    single-layer quartic term exactly.
    """
    u, v, ux, vx, B1, B2 = f.u, f.v, f.ux, f.vx, f.B1, f.B2
    mp = f.mult_pad
    l2 = 0.5 * f.integral(u * B1 + v * B2)
    l3 = 0.5 * f.integral(-(ux**2 - B1**2) * u + (vx**2 - B2**2) * v)
    r1, r2, w1, w2, z1, z2 = f.upper_quartic_fields()
    l4 = (
        0.5 * f.integral(z1 * w1 + z2 * w2)
        - 0.5 * f.integral(r1 * mp("fb_diag", r1) + 2.0 * r1 * mp("fb_off", r2)
                           + r2 * mp("fb_diag", r2))
        + 0.5 * f.integral(mp("ik", B1) * u**2 * ux + mp("ik", B2) * v**2 * vx)
    )
    return l2, l3, l4


def eval_L_lower(eta_under: np.ndarray, grid: PeriodicGrid):
    """Quadratic, cubic and quartic kinetic terms of the lower layer."""
    f = _Fields(ProfilePair(grid, eta_under, np.zeros_like(eta_under)))
    return _lower_parts(f)


def eval_L_upper(eta: ProfilePair):
    """Quadratic, cubic and quartic kinetic terms of the upper layer."""
    return _upper_parts(_Fields(eta))


def eval_L_trunc(eta: ProfilePair, p: Params):
    """Combined truncation (l2, l3, l4) with the density weighting."""
    f = _Fields(eta)
    lo = _lower_parts(f)
    up = _upper_parts(f)
    return tuple(a + p.rho * b for a, b in zip(lo, up))


def eval_K(eta: ProfilePair, p: Params):
    """Exact surface energy and its quadratic/quartic truncations.

    Returns (k_total, k2, k4).  The exact value uses the full
    sqrt(1 + eta_x^2) integrand on the padded grid; the truncations are
    the displayed polynomial parts.
    """
    f = _Fields(eta)
    r, bu, bo = p.rho, p.beta_under, p.beta_over
    k_total = f.integral(
        0.5 * (1.0 - r) * f.u**2 + 0.5 * r * f.v**2
        + bu * (np.sqrt(1.0 + f.ux**2) - 1.0)
        + r * bo * (np.sqrt(1.0 + f.vx**2) - 1.0)
    )
    k2 = 0.5 * f.integral(
        (1.0 - r) * f.u**2 + r * f.v**2 + bu * f.ux**2 + r * bo * f.vx**2
    )
    k4 = -0.125 * f.integral(bu * f.ux**4 + r * bo * f.vx**4)
    return k_total, k2, k4


def grad_K(eta: ProfilePair, p: Params):
    """L^2 gradient of the exact surface energy."""
    f = _Fields(eta)
    n = eta.grid.n

    def tension_term(wx, beta):
        s = wx / np.sqrt(1.0 + wx**2)
        S = np.fft.rfft(s)
        ds = np.fft.irfft(_symbols(eta.grid).ik_pad * S, _PAD * n)
        return -beta * ds

    gu = _truncate_values((1.0 - p.rho) * f.u + tension_term(f.ux, p.beta_under), n)
    gv = _truncate_values(
        p.rho * f.v + p.rho * tension_term(f.vx, p.beta_over), n
    )
    return gu, gv


def m_lower(u1: np.ndarray, u2: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Symmetric bilinear form whose diagonal is the cubic lower gradient."""
    n = grid.n
    s = _symbols(grid)
    U1, U2 = _rfft(u1, n), _rfft(u2, n)
    a1, a2 = _pad_values(U1, n), _pad_values(U2, n)
    a1x, a2x = _pad_values(s.ik * U1, n), _pad_values(s.ik * U2, n)
    a1xx, a2xx = _pad_values(s.mk2 * U1, n), _pad_values(s.mk2 * U2, n)
    K1, K2 = _pad_values(s.absk * U1, n), _pad_values(s.absk * U2, n)

    def Kp(w):
        return np.fft.irfft(s.absk_pad * np.fft.rfft(w), _PAD * n)

    # swapped pairs are grouped so the float sum is exactly symmetric
    w = (
        -0.5 * (Kp(a1 * K2) + Kp(a2 * K1))
        - 0.5 * K1 * K2 - 0.5 * a1x * a2x
        - 0.5 * (a1xx * a2 + a1 * a2xx)
    )
    return _truncate_values(w, n)


def m_upper(eta1: ProfilePair, eta2: ProfilePair):
    """Symmetric bilinear form whose diagonal is the cubic upper gradient."""
    f1, f2 = _Fields(eta1), _Fields(eta2)
    n = eta1.grid.n
    Kd, Ko = f1.mult_pad, f1.mult_pad  # same grid symbols

    comp1 = (
        0.5 * f1.ux * f2.ux + 0.5 * (f1.uxx * f2.u + f2.uxx * f1.u)
        + 0.5 * f1.B1 * f2.B1
        + 0.5 * (Kd("fb_diag", f1.u * f2.B1) + Kd("fb_diag", f2.u * f1.B1))
        - 0.5 * (Ko("fb_off", f1.v * f2.B2) + Ko("fb_off", f2.v * f1.B2))
    )
    comp2 = (
        -0.5 * f1.vx * f2.vx - 0.5 * (f1.vxx * f2.v + f2.vxx * f1.v)
        - 0.5 * f1.B2 * f2.B2
        - 0.5 * (Kd("fb_diag", f1.v * f2.B2) + Kd("fb_diag", f2.v * f1.B2))
        + 0.5 * (Ko("fb_off", f1.u * f2.B1) + Ko("fb_off", f2.u * f1.B1))
    )
    return _truncate_values(comp1, n), _truncate_values(comp2, n)


def _grad_lower(f: _Fields) -> np.ndarray:
    """Gradient of l2+l3+l4 of the lower layer, on the padded grid."""
    u, ux, uxx, Ku = f.u, f.ux, f.uxx, f.Ku
    mp = f.mult_pad
    KuKu = mp("absk", u * Ku)
    g2 = Ku
    g3 = -0.5 * Ku**2 - 0.5 * ux**2 - u * uxx - KuKu
    g4 = (
        u * uxx * Ku
        + 0.5 * mp("mk2", u**2 * Ku)
        + 0.5 * mp("absk", u**2 * uxx)
        + Ku * KuKu
        + mp("absk", u * KuKu)
    )
    return g2 + g3 + g4


def _grad_upper(f: _Fields):
    """Gradient of l2+l3+l4 of the upper layer, on the padded grid."""
    u, v, ux, vx, uxx, vxx, B1, B2 = (
        f.u, f.v, f.ux, f.vx, f.uxx, f.vxx, f.B1, f.B2,
    )
    mp = f.mult_pad
    K11_uB1 = mp("fb_diag", u * B1)
    K21_vB2 = mp("fb_off", v * B2)

    gu23 = B1 + 0.5 * ux**2 + u * uxx + 0.5 * B1**2 + K11_uB1 - K21_vB2
    gv23 = B2 - 0.5 * vx**2 - v * vxx - 0.5 * B2**2 \
        - mp("fb_diag", v * B2) + mp("fb_off", u * B1)

    r1, r2, w1, w2, z1, z2 = f.upper_quartic_fields()
    z1x = mp("ik", z1)
    z2x = mp("ik", z2)
    u2ux_x = mp("ik", u**2 * ux)
    v2vx_x = mp("ik", v**2 * vx)
    gu4 = (
        u * mp("ik", mp("fb_diag", z1) + mp("fb_off", z2))
        - z1x * B1
        - mp("fb_diag", u * z1x)
        - mp("fb_off", v * z2x)
        + u * mp("ik", mp("fb_diag", r1) + mp("fb_off", r2))
        - 0.5 * mp("fb_diag", u2ux_x)
        - 0.5 * mp("fb_off", v2vx_x)
        - 0.5 * u**2 * mp("mk2", B1)
    )
    gv4 = (
        v * mp("ik", mp("fb_off", z1) + mp("fb_diag", z2))
        - z2x * B2
        - mp("fb_diag", v * z2x)
        - mp("fb_off", u * z1x)
        + v * mp("ik", mp("fb_off", r1) + mp("fb_diag", r2))
        - 0.5 * mp("fb_diag", v2vx_x)
        - 0.5 * mp("fb_off", u2ux_x)
        - 0.5 * v**2 * mp("mk2", B2)
    )
    return gu23 + gu4, gv23 + gv4


def grad_L_trunc(eta: ProfilePair, p: Params):
    """L^2 gradient of the combined truncated kinetic energy."""
    f = _Fields(eta)
    n = eta.grid.n
    glow = _grad_lower(f)
    gu_up, gv_up = _grad_upper(f)
    gu = _truncate_values(glow + p.rho * gu_up, n)
    gv = _truncate_values(p.rho * gv_up, n)
    return gu, gv


def eval_J(eta: ProfilePair, p: Params, mu: float) -> FunctionalBreakdown:
    """Reduced objective J_mu = K_exact + mu^2 / (l2 + l3 + l4)."""
    k_total, k2, k4 = eval_K(eta, p)
    l2, l3, l4 = eval_L_trunc(eta, p)
    l_trunc = l2 + l3 + l4
    if l_trunc <= 0.0:
        raise OutOfConeError(
            f"truncated kinetic energy is non-positive ({l_trunc}); "
            "profile left the validity cone"
        )
    return FunctionalBreakdown(
        k_total=k_total, k2=k2, k4=k4, l2=l2, l3=l3, l4=l4,
        l_trunc=l_trunc, j_mu=k_total + mu**2 / l_trunc, mu=mu,
    )


def grad_J(eta: ProfilePair, p: Params, mu: float):
    """L^2 gradient of J_mu via the chain rule, plus the breakdown."""
    bd = eval_J(eta, p, mu)
    gku, gkv = grad_K(eta, p)
    glu, glv = grad_L_trunc(eta, p)
    w = (mu / bd.l_trunc) ** 2
    return (gku - w * glu, gkv - w * glv), bd


def l2_norm_pair(gu: np.ndarray, gv: np.ndarray, grid: PeriodicGrid) -> float:
    return math.sqrt(grid.dx * float(np.sum(gu**2 + gv**2)))


def build_eta_star(c: NlsCoefficients, crit: CriticalPoint, eps: float,
                   grid: PeriodicGrid, p: Params) -> ProfilePair:
    """Modulated-carrier test profile.

    eps phi(eps x) cos(k0 x) v0 plus the second-harmonic and mean-flow
    corrections at order eps^2.  Envelopes are wrapped once around the
    period, which makes the profile smoothly periodic; the wrap overlap
    must be negligible.
    """
    if eps == 0.0:
        return zero_profile(grid)
    if eps < 0.0:
        raise RangeError("eps must be non-negative")
    amp, decay = soliton_shape(c)
    L = grid.period
    overlap = 1.0 / math.cosh(0.5 * decay * eps * L)
    if overlap > 1e-12:
        raise GeometryError(
            f"envelope wrap overlap {overlap:.2e} exceeds 1e-12; "
            "enlarge the period or the carrier multiple"
        )
    kc = grid.carrier
    if abs(kc - crit.k0) > 1e-8 * crit.k0:
        raise ConfigError(
            f"grid carrier {kc} does not represent k0={crit.k0}"
        )

    x = grid.x
    phi = np.zeros_like(x)
    for j in (-1, 0, 1):
        phi += amp / np.cosh(decay * eps * (x + j * L))

    w1 = np.linalg.solve(eval_g(2.0 * kc, p, crit.nu0), c.a3_vec1)
    w2 = np.linalg.solve(g_at_zero(p, crit.nu0), c.a3_vec2)
    env2 = -0.5 * phi**2

    carrier = np.cos(kc * x)
    carrier2 = np.cos(2.0 * kc * x)
    eta_under = (
        eps * phi * carrier
        + eps**2 * env2 * (w1[0] * carrier2 + w2[0])
    )
    eta_over = (
        -crit.a * eps * phi * carrier
        + eps**2 * env2 * (w1[1] * carrier2 + w2[1])
    )
    n = grid.n
    eta_under = np.fft.irfft(_rfft(eta_under, n), n)
    eta_over = np.fft.irfft(_rfft(eta_over, n), n)
    return ProfilePair(grid, eta_under, eta_over)


def suggest_carrier_multiple(c: NlsCoefficients, crit: CriticalPoint,
                             mu: float, safety: float = 1.1) -> int:
    """Smallest carrier multiple whose period passes the wrap test at mu.

    The widest envelope probed while inverting mu -> eps has eps ~ 0.95 mu,
    and sech(x) < 1e-12 needs x > 28.4; ``safety`` pads the bound.
    """
    _, decay = soliton_shape(c)
    period_min = 2.0 * 28.4 * safety / (decay * 0.95 * mu)
    return max(1, math.ceil(period_min * crit.k0 / (2.0 * np.pi)))


def mu_of_eps(p: Params, c: NlsCoefficients, crit: CriticalPoint,
              grid: PeriodicGrid, eps: float) -> float:
    """Momentum level carried by the test profile: mu = nu0 * L_trunc."""
    eta = build_eta_star(c, crit, eps, grid, p)
    l2, l3, l4 = eval_L_trunc(eta, p)
    return crit.nu0 * (l2 + l3 + l4)


def eps_of_mu(p: Params, c: NlsCoefficients, crit: CriticalPoint,
              grid: PeriodicGrid, mu: float, rel_tol: float = 1e-12) -> float:
    """Invert eps -> mu(eps) by a bisection-safeguarded secant iteration."""
    if mu <= 0.0:
        raise RangeError("mu must be positive")
    # mu(eps) = eps + O(eps^3): start from a narrow bracket (which keeps the
    # widest trial envelope inside the wrap tolerance) and expand if needed.
    a = b = fa = fb = None
    for lo_f, hi_f in ((0.95, 1.06), (0.8, 1.25), (0.5, 2.0), (0.25, 4.0)):
        lo, hi = lo_f * mu, hi_f * mu
        f_lo = mu_of_eps(p, c, crit, grid, lo) - mu
        f_hi = mu_of_eps(p, c, crit, grid, hi) - mu
        if f_lo < 0.0 < f_hi:
            a, b, fa, fb = lo, hi, f_lo, f_hi
            break
    if a is None:
        raise RangeError(
            "mu(eps) is not increasing through the target on the bracket; "
            "eps is outside the small-amplitude range"
        )
    x = mu  # eps ~ mu at leading order
    for _ in range(200):
        fx = mu_of_eps(p, c, crit, grid, x) - mu
        if fx == 0.0:
            return x
        if fx < 0.0:
            a, fa = x, fx
        else:
            b, fb = x, fx
        x_secant = (a * fb - b * fa) / (fb - fa)
        x_new = x_secant if a < x_secant < b else 0.5 * (a + b)
        if abs(x_new - x) <= rel_tol * x_new:
            return x_new
        x = x_new
    raise RangeError("eps(mu) iteration did not converge")


# ---------------------------------------------------------------------------
# profile serialisation


def atomic_write_text(path, text: str):
    """Write via a same-directory temp file and rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sidecar_path(csv_path) -> str:
    return os.fspath(csv_path) + ".json"


def write_profile_csv(path, eta: ProfilePair):
    """CSV columns x, eta_under, eta_over plus a JSON grid sidecar."""
    lines = ["x,eta_under,eta_over"]
    for x, a, b in zip(eta.grid.x, eta.eta_under, eta.eta_over):
        lines.append(f"{x:.17g},{a:.17g},{b:.17g}")
    atomic_write_text(path, "\n".join(lines) + "\n")
    meta = {
        "n": eta.grid.n,
        "period": float(f"{eta.grid.period:.17g}"),
        "k0_multiple": eta.grid.k0_multiple,
    }
    atomic_write_text(sidecar_path(path), json.dumps(meta, sort_keys=True) + "\n")


def read_profile_csv(path) -> ProfilePair:
    with open(sidecar_path(path)) as fh:
        meta = json.load(fh)
    grid = PeriodicGrid(n=meta["n"], period=meta["period"],
                        k0_multiple=meta["k0_multiple"])
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.shape != (grid.n, 3):
        raise ConfigError(f"profile CSV shape {data.shape} does not match grid")
    if not np.all(np.diff(data[:, 0]) > 0):
        raise ConfigError("profile CSV rows must be ascending in x")
    return ProfilePair(grid, data[:, 1].copy(), data[:, 2].copy())
