"""Time evolution for the cubic family on a circle.

Equations covered by one convention,

    i du/dt + sign * coeff * (-d^2/dx^2)^alpha u + |u|^2 u = 0,

so a free mode n rotates as exp(+i * sign * coeff * (2 pi |n| / L)^(2 alpha) t)
and the dispersionless equation (coeff = 0) is solved exactly by the
pointwise rotation u = phi * exp(i |phi|^2 t).  The Wick variant replaces
|u|^2 u by (|u|^2 - 2 mean|u|^2) u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.fft import next_fast_len

from .torus import (
    BudgetExceededError,
    SpectralField,
    analyze,
    cubic_density,
    enlarge_band,
    mean_and_l2,
    synthesize,
)


class BlowupError(RuntimeError):
    """Non-finite values appeared during integration (truncated blow-up)."""


@dataclass(frozen=True)
class EquationSpec:
    """Dispersion data: exponent alpha, coefficient, sign, Wick flag."""

    alpha: float = 1.0
    dispersion_coeff: float = 1.0
    dispersion_sign: int = 1
    wick: bool = False

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError("alpha must be positive")
        if self.dispersion_coeff < 0.0:
            raise ValueError("dispersion_coeff must be >= 0")
        if self.dispersion_sign not in (-1, 1):
            raise ValueError("dispersion_sign must be +1 or -1")

    @staticmethod
    def cubic_nls() -> "EquationSpec":
        return EquationSpec()

    @staticmethod
    def wick_nls() -> "EquationSpec":
        return EquationSpec(wick=True)

    @staticmethod
    def ode() -> "EquationSpec":
        return EquationSpec(dispersion_coeff=0.0)

    @staticmethod
    def fractional(alpha: float) -> "EquationSpec":
        return EquationSpec(alpha=alpha)

    @staticmethod
    def small_dispersion(delta: float, alpha: float = 1.0) -> "EquationSpec":
        return EquationSpec(alpha=alpha, dispersion_coeff=delta ** (2.0 * alpha))


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    method: str = "split_step"
    grid_oversample: int = 3

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.method not in ("split_step", "rk4"):
            raise ValueError("method must be split_step or rk4")
        if self.grid_oversample < 3:
            raise ValueError("grid_oversample must be >= 3 (cubic dealiasing)")


def free_rotation_rates(field: SpectralField, eq: EquationSpec) -> np.ndarray:
    """Per-mode angular rates: mode n rotates as exp(+i rate t) freely."""
    xi = np.abs(2.0 * np.pi * field.frequencies())
    return eq.dispersion_sign * eq.dispersion_coeff * xi ** (2.0 * eq.alpha)


class EvolveResult(NamedTuple):
    field: SpectralField
    tail_mass: float


def ode_exact_evolve(
    field: SpectralField,
    t: float,
    wick: bool = False,
    oversample: int = 8,
    out_bandwidth: int | None = None,
) -> EvolveResult:
    """Closed-form dispersionless solution phi * exp(i |phi|^2 t).

    The rotation is not band-limited, so it is sampled on a grid with the
    requested oversampling, re-analyzed, and the discarded tail mass
    (grid L^2 mass beyond the retained band) is reported.
    """
    if oversample < 8:
        raise ValueError("oversample must be >= 8")
    m = field.bandwidth
    m_out = m if out_bandwidth is None else int(out_bandwidth)
    if m_out < m:
        raise ValueError("out_bandwidth cannot be below the input band")
    # factor `oversample` relative to the data band, and at least Nyquist x2
    # for the retained output band
    g = next_fast_len(max(oversample * (2 * m + 1), 2 * (2 * m_out + 1)))
    u = synthesize(enlarge_band(field, m_out), g)
    shift = 2.0 * mean_and_l2(field)[1] if wick else 0.0
    w = u * np.exp(1j * t * (np.abs(u) ** 2 - shift))
    out = analyze(w, field.period, m_out)
    grid_mass = float(np.mean(np.abs(w) ** 2))
    kept_mass = float(np.sum(np.abs(out.coeffs) ** 2))
    return EvolveResult(out, max(grid_mass - kept_mass, 0.0) * field.period)


def _nonlinear_rotation(u: np.ndarray, dt: float, wick: bool, msq: float) -> np.ndarray:
    shift = 2.0 * msq if wick else 0.0
    return u * np.exp(1j * dt * (np.abs(u) ** 2 - shift))


def split_step_evolve(
    field: SpectralField, eq: EquationSpec, t: float, cfg: StepperConfig
) -> SpectralField:
    """Strang splitting: exact free half-steps around the exact pointwise
    nonlinear rotation.  Second order in dt globally."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return field
    n_steps = max(1, round(t / cfg.dt))
    dt = t / n_steps
    m = field.bandwidth
    g = next_fast_len(cfg.grid_oversample * (2 * m + 1))
    half = np.exp(1j * free_rotation_rates(field, eq) * dt / 2.0)
    coeffs = field.coeffs.copy()
    for _ in range(n_steps):
        coeffs *= half
        u = synthesize(SpectralField(field.period, coeffs), g)
        msq = float(np.sum(np.abs(coeffs) ** 2))
        u = _nonlinear_rotation(u, dt, eq.wick, msq)
        coeffs = analyze(u, field.period, m).coeffs.copy()
        coeffs *= half
        if not np.all(np.isfinite(coeffs)):
            raise BlowupError(f"non-finite coefficients at step size {dt}")
    return field.with_coeffs(coeffs)


def rk4_spectral_evolve(
    field: SpectralField, eq: EquationSpec, t: float, cfg: StepperConfig
) -> SpectralField:
    """Classical RK4 on the truncated coefficient system.

    Independent of the splitting scheme; used to cross-check it.
    """
    if t < 0.0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return field
    rates = free_rotation_rates(field, eq)

    def rhs(c):
        f = field.with_coeffs(c)
        return 1j * rates * c + 1j * cubic_density(f, wick=eq.wick).coeffs

    n_steps = max(1, round(t / cfg.dt))
    dt = t / n_steps
    c = field.coeffs.copy()
    for _ in range(n_steps):
        k1 = rhs(c)
        k2 = rhs(c + 0.5 * dt * k1)
        k3 = rhs(c + 0.5 * dt * k2)
        k4 = rhs(c + dt * k3)
        c = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(c)):
            raise BlowupError(f"non-finite coefficients at step size {dt}")
    return field.with_coeffs(c)


def interaction_picture(
    field: SpectralField,
    t: float,
    alpha: float,
    dispersion_coeff: float = 1.0,
    dispersion_sign: int = 1,
    inverse: bool = False,
) -> SpectralField:
    """Undo the free rotation: mode n is multiplied by exp(-i rate t).

    A free solution becomes constant in time; all weighted-coefficient
    norms are unchanged (modulus-1 multipliers).
    """
    eq = EquationSpec(alpha=alpha, dispersion_coeff=dispersion_coeff, dispersion_sign=dispersion_sign)
    phase = -free_rotation_rates(field, eq) * t
    if inverse:
        phase = -phase
    return field.with_coeffs(field.coeffs * np.exp(1j * phase))


def phase_weight(n: int, n1: int, n2: int, n3: int, alpha: float) -> float:
    """|n|^2a - |n1|^2a + |n2|^2a - |n3|^2a on the resonance set n = n1-n2+n3."""
    if n != n1 - n2 + n3:
        raise ValueError(f"modes violate n = n1 - n2 + n3: {(n, n1, n2, n3)}")
    a2 = 2.0 * alpha
    return float(abs(n) ** a2 - abs(n1) ** a2 + abs(n2) ** a2 - abs(n3) ** a2)


def oscillatory_integral(phi: float, t: float) -> complex:
    """Integral over [0, t] of (1 - exp(-i phi t')): the defect of the
    Duhamel kernel from its resonant value.

    Closed form t - (1 - exp(-i phi t))/(i phi); exactly 0 at phi = 0;
    modulus at most min(2t, t^2 |phi|).
    """
    if t < 0.0:
        raise ValueError("t must be >= 0")
    z = phi * t
    if z == 0.0:
        return 0.0 + 0.0j
    if abs(z) < 1e-4:
        # series of 1 - (1 - exp(-iz))/(iz), scaled by t, to avoid cancellation
        iz = 1j * z
        acc = 0.0 + 0.0j
        term = 1.0 + 0.0j
        for k in range(2, 9):
            term *= -iz / k
            acc += term
        return -t * acc
    return t - (1.0 - np.exp(-1j * z)) / (1j * phi)


def duhamel_kernel(phi: np.ndarray, t: float) -> np.ndarray:
    """Integral over [0, t] of exp(-i phi t'), elementwise, exact at phi=0."""
    phi = np.asarray(phi, dtype=float)
    out = np.empty(phi.shape, dtype=complex)
    small = np.abs(phi * t) < 1e-4
    ps = phi[~small]
    out[~small] = (1.0 - np.exp(-1j * ps * t)) / (1j * ps)
    zs = phi[small] * t
    out[small] = t * (1.0 - 0.5j * zs - zs**2 / 6.0 + 1j * zs**3 / 24.0)
    return out


def gauge_transform(field: SpectralField, t: float, inverse: bool = False) -> SpectralField:
    """Global phase exp(-2 i t mean|u|^2); bridges the plain and Wick flows."""
    _, msq = mean_and_l2(field)
    sign = 1.0 if inverse else -1.0
    return field.with_coeffs(field.coeffs * np.exp(sign * 2j * t * msq))


def scale_map(field: SpectralField, lam: float, delta: float, alpha: float) -> SpectralField:
    """Relabel a field on the circle of circumference delta/lam down to the
    unit circle: mode n/L becomes integer mode n, amplitude times lam^(-alpha).

    Time arguments transform as t = lam^(2 alpha) t_long (caller's books).
    """
    if not 0.0 < lam <= delta:
        raise ValueError("need 0 < lam <= delta")
    L = delta / lam
    if abs(field.period - L) > 1e-9 * L:
        raise ValueError(f"field period {field.period} != delta/lam = {L}")
    return SpectralField(1.0, field.coeffs * lam ** (-alpha))


def galilean_boost(field: SpectralField, beta: int, t: float) -> SpectralField:
    """Boost by an even integer beta: shift every mode up by m = beta/2 and
    apply the two phases that keep boosted trajectories solutions.

    In this 2-pi convention the boosted field is
    exp(2 pi i (m/L) x) exp(i (2 pi m / L)^2 t) u(x + 4 pi m t / L, t).
    """
    if beta != int(beta) or int(beta) % 2 != 0:
        raise ValueError("beta must be an even integer")
    m_shift = int(beta) // 2
    if m_shift == 0:
        return field
    L = field.period
    m = field.bandwidth
    out = np.zeros_like(field.coeffs)
    n = field.modes()
    src = n - m_shift
    ok = np.abs(src) <= m
    carrier = np.exp(1j * (2.0 * np.pi * m_shift / L) ** 2 * t)
    translation = np.exp(2j * np.pi * (src[ok] / L) * (4.0 * np.pi * m_shift * t / L))
    out[ok] = carrier * translation * field.coeffs[src[ok] + m]
    return field.with_coeffs(out)


# ---------------------------------------------------------------------------
# Picard iterates in the interaction picture

def _support_arrays(field: SpectralField):
    n = field.modes()
    nz = field.coeffs != 0.0
    return n[nz], field.coeffs[nz]


def _order_one_coeffs(
    n_sup: np.ndarray,
    c_sup: np.ndarray,
    pow_table: np.ndarray,
    pow_offset: int,
    out_modes: np.ndarray,
    symbol_scale: float,
    t: float,
) -> np.ndarray:
    """i * sum over n = n1 - n2 + n3 of K(Phi) c1 conj(c2) c3, per output mode."""
    lo, hi = int(n_sup.min()), int(n_sup.max())
    index_of = np.full(hi - lo + 1, -1, dtype=int)
    index_of[n_sup - lo] = np.arange(n_sup.size)
    n13 = n_sup[:, None] + n_sup[None, :]  # n1 + n3
    c13 = c_sup[:, None] * c_sup[None, :]
    p13 = pow_table[n_sup + pow_offset][:, None] + pow_table[n_sup + pow_offset][None, :]
    out = np.zeros(out_modes.size, dtype=complex)
    for j, n in enumerate(out_modes):
        n2 = n13 - int(n)
        valid = (n2 >= lo) & (n2 <= hi)
        idx = index_of[np.where(valid, n2 - lo, 0)]
        valid &= idx >= 0
        if not np.any(valid):
            continue
        c2 = np.conj(c_sup[idx[valid]])
        p2 = pow_table[n2[valid] + pow_offset]
        pn = pow_table[int(n) + pow_offset]
        phi = symbol_scale * (pn - p13[valid] + p2)
        out[j] = 1j * np.sum(c13[valid] * c2 * duhamel_kernel(phi, t))
    return out


def picard_expansion(
    phi: SpectralField,
    t: float,
    alpha: float,
    order: int = 1,
    budget: int = 200_000_000,
    dispersion_coeff: float = 1.0,
    dispersion_sign: int = 1,
    nodes_per_panel: int = 6,
) -> SpectralField:
    """Picard iterates of the interaction-picture Duhamel equation.

    Order 1: phi + i sum over the resonance set of the closed-form time
    integral of exp(-i Phi t') times the coefficient triple product.
    Order 2: the same Duhamel map applied to the order-1 iterate, with the
    time integral done by composite Gauss-Legendre panels sized to the
    largest realized phase (the integrand oscillates at rate |Phi|).

    Refuses with a size report when the direct triple summation would
    exceed ``budget`` kernel evaluations.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if t < 0.0:
        raise ValueError("t must be >= 0")
    n_sup, c_sup = _support_arrays(phi)
    if n_sup.size == 0:
        return phi
    n_max = int(np.max(np.abs(n_sup)))
    out_band = 3 * n_max
    symbol_scale = dispersion_sign * dispersion_coeff * (2.0 * np.pi / phi.period) ** (2.0 * alpha)
    a2 = 2.0 * alpha
    pow_offset = out_band
    pow_table = np.abs(np.arange(-out_band, out_band + 1, dtype=float)) ** a2

    # output modes worth visiting: all n with n = n1 - n2 + n3 solvable
    sup_set = set(int(v) for v in n_sup)
    sums = sorted({a + b for a in sup_set for b in sup_set})
    reachable = sorted({sv - n2 for sv in sums for n2 in sup_set})
    out_modes = np.array([n for n in reachable if abs(n) <= out_band], dtype=int)

    work = n_sup.size ** 2 * out_modes.size
    if order == 1 and work > budget:
        raise BudgetExceededError(
            f"order-1 triple summation needs {work} kernel evaluations (budget {budget})",
            required=work,
            budget=budget,
        )

    base = enlarge_band(phi, out_band)
    if order == 1:
        first = _order_one_coeffs(n_sup, c_sup, pow_table, pow_offset, out_modes, symbol_scale, t)
        coeffs = base.coeffs.copy()
        coeffs[out_modes + out_band] += first
        return SpectralField(phi.period, coeffs)

    # order 2: u2(t) = phi + i * integral of the phase-wrapped cubic of u1(t')
    phase_max = abs(symbol_scale) * 4.0 * float(out_band) ** a2
    panels = max(1, math.ceil(t * phase_max / 3.0))
    glx, glw = np.polynomial.legendre.leggauss(nodes_per_panel)
    nodes = []
    weights = []
    edges = np.linspace(0.0, t, panels + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.extend(0.5 * (b - a) * glx + 0.5 * (a + b))
        weights.extend(0.5 * (b - a) * glw)
    work = n_sup.size ** 2 * out_modes.size * len(nodes)
    if work > budget:
        raise BudgetExceededError(
            f"order-2 quadrature needs {work} kernel evaluations (budget {budget})",
            required=work,
            budget=budget,
        )
    band2 = 3 * out_band
    rates = None
    acc = np.zeros(2 * band2 + 1, dtype=complex)
    for tp, wq in zip(nodes, weights):
        first = _order_one_coeffs(n_sup, c_sup, pow_table, pow_offset, out_modes, symbol_scale, tp)
        u1 = base.coeffs.copy()
        u1[out_modes + out_band] += first
        u1f = SpectralField(phi.period, u1)
        # wrap into the lab frame, take the exact cubic, wrap back
        if rates is None:
            eq = EquationSpec(alpha=alpha, dispersion_coeff=dispersion_coeff, dispersion_sign=dispersion_sign)
            rates_in = free_rotation_rates(u1f, eq)
            rates_out = free_rotation_rates(SpectralField(phi.period, np.zeros(2 * band2 + 1, dtype=complex)), eq)
            rates = (rates_in, rates_out)
        lab = u1f.with_coeffs(u1f.coeffs * np.exp(1j * rates[0] * tp))
        cubic = cubic_density(enlarge_band(lab, band2))
        acc += wq * cubic.coeffs * np.exp(-1j * rates[1] * tp)
    out = enlarge_band(phi, band2).coeffs + 1j * acc
    return SpectralField(phi.period, out)
