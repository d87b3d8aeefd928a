"""Exact spectral propagation of the vacuum Maxwell equations."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fields import FieldState, PhysicalConstants
from .observables import DensityFluxPair
from .spectral import GridSpec, norm, to_real, to_spectral


@dataclass(frozen=True)
class PropagationPlan:
    """Per-mode frequencies on a grid; phases exp(-+ i w dt) are cached per dt."""

    grid: GridSpec
    constants: PhysicalConstants

    @property
    def omega(self) -> np.ndarray:
        return self.constants.c_light * self.grid.kmag

    def phases(self, dt: float) -> np.ndarray:
        """exp(-i w dt) per mode; the negative-helicity phase is its conjugate."""
        return _phases(self.grid, self.constants.c_light, float(dt))


@lru_cache(maxsize=32)
def _phases(grid: GridSpec, c_light: float, dt: float) -> np.ndarray:
    ph = np.exp(-1j * c_light * grid.kmag * dt)
    ph.setflags(write=False)
    return ph


@lru_cache(maxsize=8)
def plan_for(grid: GridSpec, constants: PhysicalConstants) -> PropagationPlan:
    return PropagationPlan(grid, constants)


def propagate(state: FieldState, dt: float, plan: PropagationPlan | None = None) -> FieldState:
    """Advance by ``dt`` exactly.

    With e = d/sqrt(eps), beta = b/sqrt(mu) and the helicity operator
    h = i khat x (h^2 = 1 on transverse modes), the combinations e +- i beta
    are eigenvectors of the flow: helicity components of G = e + i beta rotate
    by exp(-+ i w t). Written without an explicit basis:

        e(t)    = cos(wt) e + sin(wt) h beta
        beta(t) = cos(wt) beta - sin(wt) h e
    """
    if dt == 0:
        return state
    grid, c = state.grid, state.constants
    plan = plan or plan_for(grid, c)
    ph = plan.phases(dt)
    cos, sin = ph.real, -ph.imag
    live = grid.live
    kh = grid.khat
    e = to_spectral(state.D, grid) / np.sqrt(c.epsilon)
    be = to_spectral(state.B, grid) / np.sqrt(c.mu)
    he = 1j * np.cross(kh, e, axis=0)
    hb = 1j * np.cross(kh, be, axis=0)
    e_t = np.where(live, cos * e + sin * hb, e)
    b_t = np.where(live, cos * be - sin * he, be)
    D = to_real(e_t * np.sqrt(c.epsilon), grid)
    B = to_real(b_t * np.sqrt(c.mu), grid)
    return state.with_fields(D, B, time=state.time + dt)


def evolve(state: FieldState, t_final: float, n_steps: int):
    """Yield the state at each of ``n_steps`` equal steps (initial state first)."""
    dt = t_final / n_steps
    plan = plan_for(state.grid, state.constants)
    yield state
    for _ in range(n_steps):
        state = propagate(state, dt, plan)
        yield state


@dataclass(frozen=True)
class ContinuityResidual:
    field: np.ndarray
    relative: float


def continuity_residual(pair: DensityFluxPair, state: FieldState, dt: float) -> ContinuityResidual:
    """Central-difference  d_t rho + div j  for a density/flux pair.

    ``relative`` is ||residual|| / ||div j||, summed over any leading
    component axes.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    plan = plan_for(state.grid, state.constants)
    rho_p = pair.density(propagate(state, dt, plan))
    rho_m = pair.density(propagate(state, -dt, plan))
    div = pair.flux_divergence(state)
    res = (rho_p - rho_m) / (2 * dt) + div
    g = state.grid
    dn = norm(div, g)
    rel = norm(res, g) / dn if dn > 0 else 0.0
    return ContinuityResidual(res, rel)
