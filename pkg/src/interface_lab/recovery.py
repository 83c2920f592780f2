"""Recovery sequences v_eps = g_eps(d) + eta_eps and the limsup certificate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffuse import DiffuseConfig, energy_array
from .errors import InvalidArgumentError, ResolutionError
from .measures import (
    DensitySpec,
    MollifierSpec,
    default_entry,
    default_mollifier,
    particle_integral,
    place_particles,
    rate_schedule,
)
from .patterns import GridIndicator, Pattern
from .sharp import sharp_energy
from .torus import GridSpec, ScalarField

PROFILE_RATE = math.sqrt(3.0) / 4.0


def optimal_profile(t):
    """z(t) = -tanh(sqrt(3) t / 4), the solution of z' = (sqrt(3)/4)(z^2 - 1), z(0) = 0."""
    out = -np.tanh(PROFILE_RATE * np.asarray(t, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def optimal_profile_derivative(t):
    out = -PROFILE_RATE / np.cosh(PROFILE_RATE * np.asarray(t, dtype=float)) ** 2
    return float(out) if np.ndim(out) == 0 else out


def _check_eps(eps):
    if not 0 < eps < 1.0 / 16.0:
        raise InvalidArgumentError("epsilon must lie in (0, 1/16)")


def g_profile(t, eps: float):
    """Truncated profile: z(t/eps) on |t| <= sqrt(eps), linear bridges to -+1 on
    sqrt(eps) <= |t| <= 2 sqrt(eps), and exactly -+1 beyond."""
    _check_eps(eps)
    t = np.asarray(t, dtype=float)
    s = math.sqrt(eps)
    zs = optimal_profile(1.0 / s)  # z(sqrt(eps) / eps)
    a = np.abs(t)
    core = optimal_profile(a / eps)
    bridge = zs + (a - s) * (-1.0 - zs) / s
    mag = np.where(a <= s, core, np.where(a <= 2 * s, bridge, -1.0))
    out = np.where(t >= 0, mag, -mag)  # the profile is odd
    return float(out) if out.ndim == 0 else out


def g_profile_derivative(t, eps: float):
    """Derivative of :func:`g_profile` (even in t; one-sided values at the kinks)."""
    _check_eps(eps)
    t = np.asarray(t, dtype=float)
    s = math.sqrt(eps)
    zs = optimal_profile(1.0 / s)
    a = np.abs(t)
    core = optimal_profile_derivative(a / eps) / eps
    out = np.where(a <= s, core, np.where(a <= 2 * s, (-1.0 - zs) / s, 0.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RecoveryField:
    field: ScalarField
    eta: float
    epsilon: float
    distance: ScalarField | None = None

    def analytic(self, pattern: Pattern):
        """Pointwise evaluator of v_eps off the grid (exact distance)."""
        return lambda p: g_profile(pattern.signed_distance(p), self.epsilon) + self.eta


def _distance_on_grid(pattern: Pattern, grid: GridSpec) -> np.ndarray:
    if isinstance(pattern, GridIndicator):
        if pattern.field.spec != grid:
            raise InvalidArgumentError("grid pattern lives on another grid")
        return pattern.distance_field().values
    return pattern.signed_distance(grid.points())


def build_recovery(pattern: Pattern, eps: float, m: float, grid: GridSpec,
                   full: bool = False):
    """v_eps = g_eps(d) + eta sampled on ``grid``, with eta fixing the mass to ``m``.

    The mass equation is linear in eta, so eta = m - integral of g_eps(d).
    """
    _check_eps(eps)
    if eps < 2 * grid.spacing:
        raise ResolutionError(f"epsilon {eps} is below two grid spacings ({2 * grid.spacing})")
    target = (1.0 + m) / 2.0
    tol = 1e-6 if not isinstance(pattern, GridIndicator) else grid.spacing * pattern.perimeter()
    if abs(pattern.area() - target) > tol:
        raise InvalidArgumentError(
            f"pattern area {pattern.area():.8f} does not match (1 + m)/2 = {target:.8f}"
        )
    d = _distance_on_grid(pattern, grid)
    base = g_profile(d, eps)
    eta = m - float(np.mean(base))
    v = ScalarField(grid, base + eta)
    return RecoveryField(v, eta, eps, ScalarField(grid, d)) if full else v


def chain_rule_gradient_term(rec: RecoveryField, coefficients=None) -> float:
    """a eps * integral of g_eps'(d)^2, using |grad d| = 1 almost everywhere."""
    a, _ = DiffuseConfig(rec.epsilon, 0.0, 0.0, rec.field.spec,
                         coefficients=coefficients or "calibrated").ab
    gp = g_profile_derivative(rec.distance.values, rec.epsilon)
    return float(a * rec.epsilon * np.mean(gp * gp))


def indicator_l1_gap(pattern: Pattern, rec: RecoveryField) -> float:
    """Integral of |v_eps - u| with u = +1 on A and -1 off A (grid quadrature)."""
    grid = rec.field.spec
    u = np.where(pattern.contains(grid.points()), 1.0, -1.0)
    return float(np.mean(np.abs(rec.field.values - u)))


@dataclass
class CertificateLevel:
    epsilon: float
    diffuse_total: float
    sharp_total: float
    gap: float
    gradient_term: float
    gradient_term_fd: float
    well_term: float
    penal_term: float
    eta: float
    particles: int

    def to_dict(self):
        return dict(self.__dict__)


def limsup_certificate(pattern: Pattern, eps_list, sigma: float = 0.0, m: float = 0.0,
                       rho: DensitySpec | None = None, resolution: int = 512, seed: int = 0,
                       mollifier: MollifierSpec | None = None, rel_tol: float = 0.05) -> dict:
    """Diffuse energy of the recovery sequence against the sharp energy.

    The gradient term uses the chain rule |grad v| = |g_eps'(d)| for exact
    distances (grid patterns fall back to finite differences, also reported
    as ``gradient_term_fd``). The well term is a grid sum. The penalization
    term integrates the analytic v_eps against mu_eps by quadrature inside
    every particle, since the particles are far smaller than a grid cell.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise InvalidArgumentError("at least three epsilon levels are required")
    rate_schedule(eps_list)  # validates ordering and rate separations
    rho = rho or DensitySpec.uniform()
    V = mollifier or default_mollifier(1.0)
    grid = GridSpec(resolution)
    sharp = sharp_energy(pattern, rho, sigma).total
    levels = []
    for eps in eps_list:
        rec = build_recovery(pattern, eps, m, grid, full=True)
        cfg = DiffuseConfig(eps, 0.0, m, grid)
        e = energy_array(rec.field.values, cfg)
        penal, count = 0.0, 0
        if sigma > 0:
            ps = place_particles(rho, default_entry(eps), seed)
            v = rec.analytic(pattern)
            penal = sigma * particle_integral(ps, lambda p: (v(p) - 1.0) ** 2)
            count = ps.total
        grad = e.gradient_term
        if not isinstance(pattern, GridIndicator):
            grad = chain_rule_gradient_term(rec)
        total = grad + e.well_term + penal
        levels.append(CertificateLevel(eps, total, sharp, total - sharp, grad, e.gradient_term,
                                       e.well_term, penal, rec.eta, count))
    gaps = [abs(lv.gap) for lv in levels]
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    final_ok = gaps[-1] < rel_tol * abs(sharp)
    return {
        "pattern": {"kind": pattern.kind, **pattern.params()},
        "sigma": sigma,
        "mass": m,
        "resolution": resolution,
        "levels": [lv.to_dict() for lv in levels],
        "sharp_total": sharp,
        "gap_decreasing": decreasing,
        "final_relative_gap": gaps[-1] / abs(sharp),
        "pass": bool(decreasing and final_ok),
    }
