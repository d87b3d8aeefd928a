"""Local and nonlocal electromagnetic observables.

Local densities (energy, momentum, Maxwell stress, angular momentum) are
pointwise quadratic forms in D and B. The nonlocal ones (transverse vector
potential, photon number and current, helicity, spin/orbital split) need a
Fourier multiplier; where a real-space double integral exists it is exposed
as a second route.

Position-weighted quantities use coordinates measured from the box centre
without periodic wrapping, so they are only meaningful for fields that
vanish near the box boundary; see ``boundary_leakage``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fields import FieldState
from .spectral import (
    GridSpec,
    KernelKind,
    apply_kernel,
    convolve_direct,
    cross,
    curl,
    divergence,
    dot,
    integrate,
    to_real,
    to_spectral,
)

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_i, _k, _j] = -1.0

LEAKAGE_SHELL = 0.1
LEAKAGE_LIMIT = 0.01


class BoundaryLeakageWarning(UserWarning):
    """Position-weighted integral evaluated on a field that reaches the box edge."""


# ---------------------------------------------------------------------------
# local densities


def energy_density(state: FieldState) -> np.ndarray:
    c = state.constants
    return 0.5 * (dot(state.D, state.D) / c.epsilon + dot(state.B, state.B) / c.mu)


def momentum_density(state: FieldState) -> np.ndarray:
    """T^{0k} = c (D x B)_k."""
    return state.constants.c_light * cross(state.D, state.B)


def maxwell_stress(state: FieldState) -> np.ndarray:
    """T^{ij} = -(D_i D_j/eps + B_i B_j/mu) + delta_ij T^{00}, shape (3, 3, nx, ny, nz)."""
    c = state.constants
    D, B = state.D, state.B
    T = -(D[:, None] * D[None, :] / c.epsilon + B[:, None] * B[None, :] / c.mu)
    u = energy_density(state)
    for i in range(3):
        T[i, i] += u
    return T


def total_energy(state: FieldState) -> float:
    return integrate(energy_density(state), state.grid)


def total_momentum(state: FieldState) -> np.ndarray:
    """Integral of T^{0k}."""
    return integrate(momentum_density(state), state.grid)


def boundary_leakage(state: FieldState, shell: float = LEAKAGE_SHELL) -> float:
    """Fraction of the field energy lying in the outer ``shell`` of the box."""
    u = energy_density(state)
    total = u.sum()
    if total == 0:
        return 0.0
    x = state.grid.positions
    half = np.array(state.grid.box).reshape(3, 1, 1, 1) / 2
    outer = np.any(np.abs(x) > (1 - 2 * shell) * half, axis=0)
    return float(u[outer].sum() / total)


def _warn_leakage(state: FieldState):
    leak = boundary_leakage(state)
    if leak > LEAKAGE_LIMIT:
        warnings.warn(
            f"{leak:.1%} of the energy lies in the outer {LEAKAGE_SHELL:.0%} shell; "
            "position-weighted integrals are unreliable",
            BoundaryLeakageWarning,
            stacklevel=3,
        )


def am_density(state: FieldState) -> np.ndarray:
    """M^{ij} = x^i T^{j0} - x^j T^{i0}, shape (3, 3, ...)."""
    x = state.grid.positions
    g = momentum_density(state)
    return x[:, None] * g[None, :] - x[None, :] * g[:, None]


def am_flux(state: FieldState) -> np.ndarray:
    """F^{ijk} = c (x^i T^{jk} - x^j T^{ik}), so that d_t M^{ij} + d_k F^{ijk} = 0."""
    x = state.grid.positions
    T = maxwell_stress(state)
    F = x[:, None, None] * T[None, :, :] - x[None, :, None] * T[:, None, :]
    return state.constants.c_light * F


def total_J(state: FieldState, warn: bool = True) -> np.ndarray:
    """Total angular momentum  J = integral of r x (D x B).

    Equal to (1/2c) eps_kij integral M^{ij}; the 1/c turns the momentum
    density T^{0k} back into D x B.
    """
    if warn:
        _warn_leakage(state)
    M = integrate(am_density(state), state.grid)
    return 0.5 * np.einsum("kij,ij->k", LEVI_CIVITA, M) / state.constants.c_light


# ---------------------------------------------------------------------------
# nonlocal quantities


def vector_potential(state: FieldState) -> np.ndarray:
    """Transverse potential  A = curl (1/4 pi |r|) * B, i.e. i k x b / k^2."""
    grid = state.grid
    b = to_spectral(state.B, grid)
    a = apply_kernel(apply_kernel(b, grid, KernelKind.INV_R), grid, KernelKind.CURL) / (4 * np.pi)
    return to_real(a, grid)


def _k2_apply(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Convolution with 1/|r|^2 (multiplier 2 pi^2 / k)."""
    return to_real(apply_kernel(to_spectral(f, grid), grid, KernelKind.INV_R2), grid)


def _k1_apply(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Convolution with 1/|r| (multiplier 4 pi / k^2)."""
    return to_real(apply_kernel(to_spectral(f, grid), grid, KernelKind.INV_R), grid)


def photon_density(state: FieldState) -> np.ndarray:
    c = state.constants
    D, B, g = state.D, state.B, state.grid
    pref = 1.0 / (4 * np.pi**2 * c.hbar * c.c_light)
    return pref * (dot(D, _k2_apply(D, g)) / c.epsilon + dot(B, _k2_apply(B, g)) / c.mu)


def photon_number(state: FieldState, route: str = "spectral") -> float:
    if route == "density":
        return integrate(photon_density(state), state.grid)
    if route != "spectral":
        raise ValueError(f"unknown route {route!r}")
    c = state.constants
    g = state.grid
    d = to_spectral(state.D, g)
    b = to_spectral(state.B, g)
    w = np.sum(np.abs(d) ** 2, axis=0) / c.epsilon + np.sum(np.abs(b) ** 2, axis=0) / c.mu
    inv_k = np.where(g.live, 1.0 / np.where(g.live, g.kmag, 1.0), 0.0)
    return float(np.sum(inv_k * w) / (2 * c.hbar * c.c_light * g.volume))


def photon_current(state: FieldState) -> np.ndarray:
    c = state.constants
    D, B, g = state.D, state.B, state.grid
    pref = c.c_light / (4 * np.pi**2 * c.hbar)
    return pref * (cross(D, _k2_apply(B, g)) - cross(B, _k2_apply(D, g)))


def _helicity_form(s: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Per-mode  s* . (i khat x s) = |s_+|^2 - |s_-|^2."""
    h = 1j * cross(grid.khat, s)
    return np.real(np.sum(np.conj(s) * h, axis=0))


def helicity(state: FieldState, normalization: str = "duality") -> float:
    """Total helicity.

    ``duality``: difference of photon numbers in the two helicity bases, the
    generator of duality rotations (equals +-N for circular states).
    ``literal``: the 1/|r| double integral with prefactor 1/(4 pi^2 hbar c).
    """
    c = state.constants
    g = state.grid
    if normalization == "duality":
        d = to_spectral(state.D, g)
        b = to_spectral(state.B, g)
        w = _helicity_form(d, g) / c.epsilon + _helicity_form(b, g) / c.mu
        inv_k = np.where(g.live, 1.0 / np.where(g.live, g.kmag, 1.0), 0.0)
        return float(np.sum(inv_k * w) / (2 * c.hbar * c.c_light * g.volume))
    if normalization == "literal":
        D, B = state.D, state.B
        val = integrate(dot(D, _k1_apply(curl(D, g), g)), g) / c.epsilon
        val += integrate(dot(B, _k1_apply(curl(B, g), g)), g) / c.mu
        return float(val / (4 * np.pi**2 * c.hbar * c.c_light))
    raise ValueError(f"unknown normalization {normalization!r}")


def helicity_components(state: FieldState) -> tuple[float, float]:
    """(N_+, N_-): photon numbers in each helicity."""
    N = photon_number(state)
    L = helicity(state)
    return 0.5 * (N + L), 0.5 * (N - L)


# ---------------------------------------------------------------------------
# spin / orbital split


def _angular_operator(A: np.ndarray, grid: GridSpec) -> np.ndarray:
    """(r x grad) A_i for every component i, shape (3 [a], 3 [i], ...)."""
    x = grid.positions
    a_hat = to_spectral(A, grid)
    grad = np.stack([to_real(1j * grid.k_eff[c] * a_hat, grid) for c in range(3)])  # [c, i]
    return np.einsum("abc,b...,ci...->ai...", LEVI_CIVITA, x, grad)


def spin_density(state: FieldState, A: np.ndarray | None = None) -> np.ndarray:
    """D x A_perp."""
    if A is None:
        A = vector_potential(state)
    return cross(state.D, A)


def orbital_density(state: FieldState, A: np.ndarray | None = None) -> np.ndarray:
    """D_i (r x grad) A_perp_i."""
    if A is None:
        A = vector_potential(state)
    return np.einsum("i...,ai...->a...", state.D, _angular_operator(A, state.grid))


def _potential_double_integral(state: FieldState, direct: bool) -> np.ndarray:
    """integral d^3r' curl' B(r') / (4 pi |r - r'|) evaluated as a convolution."""
    g = state.grid
    cB = curl(state.B, g)
    if direct:
        return convolve_direct(cB, g, KernelKind.INV_R) / (4 * np.pi)
    return _k1_apply(cB, g) / (4 * np.pi)


def _route_potential(state: FieldState, route: str) -> np.ndarray:
    if route == "potential":
        return vector_potential(state)
    if route == "double_integral":
        return _potential_double_integral(state, direct=False)
    if route == "direct":
        return _potential_double_integral(state, direct=True)
    raise ValueError(f"unknown route {route!r}")


def spin_J(state: FieldState, route: str = "potential", warn: bool = True) -> np.ndarray:
    if warn:
        _warn_leakage(state)
    return integrate(spin_density(state, _route_potential(state, route)), state.grid)


def orbital_J(state: FieldState, route: str = "potential", warn: bool = True) -> np.ndarray:
    if warn:
        _warn_leakage(state)
    return integrate(orbital_density(state, _route_potential(state, route)), state.grid)


# ---------------------------------------------------------------------------
# density / flux pairs for continuity checks


@dataclass(frozen=True)
class DensityFluxPair:
    id: str
    density: Callable[[FieldState], np.ndarray]
    flux: Callable[[FieldState], np.ndarray]

    def flux_divergence(self, state: FieldState) -> np.ndarray:
        F = self.flux(state)
        return divergence_last(F, state.grid)


def divergence_last(F: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Divergence over the last vector index of a (..., 3, nx, ny, nz) array."""
    lead = F.shape[:-4]
    flat = F.reshape((-1, 3) + grid.n)
    out = np.stack([divergence(f, grid) for f in flat])
    return out.reshape(lead + grid.n)


def _energy_flux(state: FieldState) -> np.ndarray:
    return state.constants.c_light * momentum_density(state)


PAIRS = {
    "photon": DensityFluxPair("photon", photon_density, photon_current),
    "energy": DensityFluxPair("energy", energy_density, _energy_flux),
    "angular_momentum": DensityFluxPair("angular_momentum", am_density, am_flux),
}
