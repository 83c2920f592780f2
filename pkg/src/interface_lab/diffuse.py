"""Diffuse penalized phase-field energy, its gradient and a mass-conserving flow.

The energy on a periodic grid is

    E(u) = a eps int |grad u|^2 + (b / eps) int (u^2 - 1)^2 + sigma int (u - 1)^2 w

with ``w`` the penalization density. The gradient term uses forward
differences, so the discrete Laplacian below is the exact derivative of the
discrete energy.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import InvalidArgumentError, StepSizeError
from .torus import GridSpec, ScalarField, field_integral

#: (a, b) presets for the interfacial coefficients.
COEFFICIENT_PRESETS = {
    # unit Modica-Mortola constant with optimal profile z' = (sqrt(3)/4)(z^2 - 1)
    "calibrated": (math.sqrt(3.0) / 2.0, 3.0 * math.sqrt(3.0) / 32.0),
    "literal": (3.0 / 8.0, 3.0 / 16.0),
}


def coefficients(preset) -> tuple[float, float]:
    if isinstance(preset, str):
        try:
            return COEFFICIENT_PRESETS[preset]
        except KeyError:
            raise InvalidArgumentError(
                f"unknown coefficient preset {preset!r}; choose from {sorted(COEFFICIENT_PRESETS)}"
            ) from None
    a, b = (float(c) for c in preset)
    if a <= 0 or b <= 0:
        raise InvalidArgumentError("interfacial coefficients must be positive")
    return a, b


def interface_constant(preset="calibrated") -> float:
    """Energy per unit length of the optimal 1-D transition: 2 sqrt(ab) * 4/3."""
    a, b = coefficients(preset)
    return 2.0 * math.sqrt(a * b) * 4.0 / 3.0


_WORKERS = 1


def set_threads(k: int | None) -> int:
    """FFT worker count; ``INTERFACE_LAB_REFERENCE=1`` pins it to one."""
    global _WORKERS
    if os.environ.get("INTERFACE_LAB_REFERENCE") == "1" or not k:
        _WORKERS = 1
    else:
        _WORKERS = max(1, int(k))
    return _WORKERS


@dataclass(frozen=True)
class DiffuseConfig:
    epsilon: float
    sigma: float
    mass: float
    grid: GridSpec
    penal_density: ScalarField | None = None
    coefficients: str | tuple = "calibrated"

    def __post_init__(self):
        h = self.grid.spacing
        if not self.epsilon >= 2 * h:
            raise InvalidArgumentError(
                f"epsilon {self.epsilon:.4g} must be at least two grid spacings ({2 * h:.4g})"
            )
        if self.sigma < 0:
            raise InvalidArgumentError("sigma must be nonnegative")
        if not -1.0 < self.mass < 1.0:
            raise InvalidArgumentError("mass must lie in (-1, 1)")
        coefficients(self.coefficients)
        w = self.penal_density
        if w is not None:
            if w.spec != self.grid:
                raise InvalidArgumentError("penalization density lives on a different grid")
            if np.any(w.values < 0):
                raise InvalidArgumentError("penalization density must be nonnegative")
            if abs(field_integral(w) - 1.0) > 1e-3:
                raise InvalidArgumentError("penalization density must have unit mass (1e-3)")
        elif self.sigma > 0:
            raise InvalidArgumentError("sigma > 0 needs a penalization density")

    @property
    def ab(self):
        return coefficients(self.coefficients)

    def weight(self) -> np.ndarray:
        w = self.penal_density
        return np.zeros(self.grid.shape) if w is None else w.values


@dataclass(frozen=True)
class EnergyBreakdown:
    gradient_term: float
    well_term: float
    penal_term: float
    total: float
    mass: float

    def as_row(self):
        return [self.gradient_term, self.well_term, self.penal_term, self.total, self.mass]


def _check(u: ScalarField, cfg: DiffuseConfig):
    if u.spec != cfg.grid:
        raise InvalidArgumentError("field and configuration grids differ")


def _forward_sq_sum(v: np.ndarray) -> float:
    total = 0.0
    for ax in range(v.ndim):
        d = np.roll(v, -1, axis=ax) - v
        total += float(np.sum(d * d))
    return total


def _energy_terms(v: np.ndarray, cfg: DiffuseConfig):
    a, b = cfg.ab
    h = cfg.grid.spacing
    dv = cfg.grid.cell_volume
    eps = cfg.epsilon
    grad = a * eps * _forward_sq_sum(v) * dv / (h * h)
    well = b / eps * float(np.sum((v * v - 1.0) ** 2)) * dv
    penal = cfg.sigma * float(np.sum((v - 1.0) ** 2 * cfg.weight())) * dv if cfg.sigma else 0.0
    return grad, well, penal


def energy_array(v: np.ndarray, cfg: DiffuseConfig) -> EnergyBreakdown:
    grad, well, penal = _energy_terms(v, cfg)
    mass = float(np.sum(v)) * cfg.grid.cell_volume
    return EnergyBreakdown(grad, well, penal, grad + well + penal, mass)


def diffuse_energy(u: ScalarField, cfg: DiffuseConfig) -> EnergyBreakdown:
    _check(u, cfg)
    return energy_array(u.values, cfg)


def _laplacian(v: np.ndarray, h: float) -> np.ndarray:
    out = -2.0 * v.ndim * v
    for ax in range(v.ndim):
        out = out + np.roll(v, 1, axis=ax) + np.roll(v, -1, axis=ax)
    return out / (h * h)


def _reaction(v, cfg):
    """Gradient of the well and penalization terms."""
    a, b = cfg.ab
    g = 4.0 * b / cfg.epsilon * v * (v * v - 1.0)
    if cfg.sigma:
        g = g + 2.0 * cfg.sigma * cfg.weight() * (v - 1.0)
    return g


def gradient_array(v: np.ndarray, cfg: DiffuseConfig) -> np.ndarray:
    a, _ = cfg.ab
    return -2.0 * a * cfg.epsilon * _laplacian(v, cfg.grid.spacing) + _reaction(v, cfg)


def variational_gradient(u: ScalarField, cfg: DiffuseConfig) -> ScalarField:
    """L^2 gradient ``g`` with ``dE(u)[phi] = int g phi dx`` for the discrete energy."""
    _check(u, cfg)
    return ScalarField(cfg.grid, gradient_array(u.values, cfg))


def truncate(u: ScalarField) -> ScalarField:
    """Clamp values to [-1, 1]."""
    return u.with_values(np.clip(u.values, -1.0, 1.0))


def laplacian_symbol(grid: GridSpec) -> np.ndarray:
    """Fourier symbol of ``-Delta_h`` on the real-FFT frequency lattice."""
    n, h = grid.resolution, grid.spacing
    full = 4.0 / (h * h) * np.sin(np.pi * sfft.fftfreq(n)) ** 2
    half = 4.0 / (h * h) * np.sin(np.pi * sfft.rfftfreq(n)) ** 2
    if grid.dimension == 2:
        return full[:, None] + half[None, :]
    return full[:, None, None] + full[None, :, None] + half[None, None, :]


def explicit_step_bound(cfg: DiffuseConfig) -> float:
    """Diffusive stability bound ``h^2 / (2 n * 2 a eps)`` for explicit stepping."""
    a, _ = cfg.ab
    return cfg.grid.spacing**2 / (2 * cfg.grid.dimension * 2.0 * a * cfg.epsilon)


@dataclass(frozen=True)
class FlowSchedule:
    time_step: float
    max_steps: int = 5000
    stop_tolerance: float = 1e-8
    stepping: str = "semi-implicit-spectral"
    patience: int = 10
    max_halvings: int = 20
    energy_tolerance: float = 1e-10

    def __post_init__(self):
        if not self.time_step > 0:
            raise InvalidArgumentError("time step must be positive")
        if self.stepping not in ("semi-implicit-spectral", "explicit"):
            raise InvalidArgumentError(f"unknown stepping {self.stepping!r}")
        if self.max_steps < 0:
            raise InvalidArgumentError("max_steps must be nonnegative")


@dataclass
class FlowResult:
    field: ScalarField
    trace: list[EnergyBreakdown]
    steps: int
    converged: bool
    time_step: float
    halvings: int = 0
    max_mass_drift: float = 0.0
    max_energy_increase: float = 0.0
    snapshots: list = field(default_factory=list)


class _SemiImplicit:
    def __init__(self, cfg: DiffuseConfig, tau: float):
        a, b = cfg.ab
        self.cfg = cfg
        wmax = float(np.max(cfg.weight())) if cfg.sigma else 0.0
        # half the Lipschitz constant of the reaction on |u| <= 1
        self.S = 4.0 * b / cfg.epsilon + cfg.sigma * wmax
        self.sym = 2.0 * a * cfg.epsilon * laplacian_symbol(cfg.grid)
        self.set_tau(tau)

    def set_tau(self, tau):
        self.tau = tau
        self.denom = 1.0 + tau * (self.S + self.sym)

    def __call__(self, v):
        tau = self.tau
        r = _reaction(v, self.cfg)
        r = r - r.mean()
        rhs = v * (1.0 + tau * self.S) - tau * r
        axes = tuple(range(v.ndim))
        hat = sfft.rfftn(rhs, axes=axes, workers=_WORKERS) / self.denom
        return sfft.irfftn(hat, s=v.shape, axes=axes, workers=_WORKERS)


class _Explicit:
    def __init__(self, cfg, tau):
        self.cfg = cfg
        self.tau = tau

    def set_tau(self, tau):
        self.tau = tau

    def __call__(self, v):
        g = gradient_array(v, self.cfg)
        return v - self.tau * (g - g.mean())


def project_mass(v: np.ndarray, m: float) -> np.ndarray:
    return v + (m - v.mean())


def minimize(cfg: DiffuseConfig, init: ScalarField, sched: FlowSchedule,
             snapshot_every: int = 0) -> FlowResult:
    """Mass-projected L^2 gradient flow from ``init``.

    Every step is accepted only if the energy does not rise by more than
    ``sched.energy_tolerance``; otherwise the time step is halved (up to
    ``sched.max_halvings`` times in a row) before giving up.
    """
    _check(init, cfg)
    if sched.stepping == "explicit" and sched.time_step > explicit_step_bound(cfg) * (1 + 1e-12):
        raise InvalidArgumentError(
            f"explicit time step {sched.time_step:.4g} exceeds the stability bound"
            f" {explicit_step_bound(cfg):.4g}"
        )
    v = project_mass(np.array(init.values), cfg.mass)
    stepper = (_SemiImplicit if sched.stepping != "explicit" else _Explicit)(cfg, sched.time_step)
    e = energy_array(v, cfg)
    trace = [e]
    snaps = [(0, ScalarField(cfg.grid, v))] if snapshot_every else []
    quiet = 0
    halvings = 0
    drift = 0.0
    rise = 0.0
    converged = False
    step = 0
    while step < sched.max_steps:
        for attempt in range(sched.max_halvings + 1):
            w = project_mass(stepper(v), cfg.mass)
            e_new = energy_array(w, cfg)
            if e_new.total <= e.total + sched.energy_tolerance:
                break
            if attempt == sched.max_halvings:
                raise StepSizeError(
                    f"energy rose by {e_new.total - e.total:.3g} at step {step + 1} after"
                    f" {sched.max_halvings} halvings (tau = {stepper.tau:.3g})"
                )
            stepper.set_tau(stepper.tau / 2)
            halvings += 1
        drift = max(drift, abs(e_new.mass - e.mass))
        rise = max(rise, e_new.total - e.total)
        step += 1
        delta = abs(e_new.total - e.total)
        v, e = w, e_new
        trace.append(e)
        if snapshot_every and step % snapshot_every == 0:
            snaps.append((step, ScalarField(cfg.grid, v)))
        quiet = quiet + 1 if delta < sched.stop_tolerance * stepper.tau else 0
        if quiet >= sched.patience:
            converged = True
            break
    return FlowResult(ScalarField(cfg.grid, v), trace, step, converged, stepper.tau, halvings,
                      drift, rise, snaps)


def random_init(grid: GridSpec, mass: float, seed: int, amplitude: float = 0.1) -> ScalarField:
    rng = np.random.default_rng(seed)
    return ScalarField(grid, mass + amplitude * rng.uniform(-1.0, 1.0, size=grid.shape))
