"""Physical constants, field states and seeded field generators."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal, Union

import numpy as np
import scipy.fft

from .spectral import (
    AXES,
    GridSpec,
    curl,
    norm,
    relative_divergence,
    remove_mean,
    to_real,
    transverse_project,
)

Polarization = Literal["linear", "circular_plus", "circular_minus"]
POLARIZATIONS = ("linear", "circular_plus", "circular_minus")

DIVERGENCE_TOL = 1e-11


@dataclass(frozen=True)
class PhysicalConstants:
    epsilon: float = 1.0
    mu: float = 1.0
    hbar: float = 1.0
    c_light: float | None = None

    def __post_init__(self):
        for name in ("epsilon", "mu", "hbar"):
            v = getattr(self, name)
            if not (v > 0 and np.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v}")
        c = 1.0 / np.sqrt(self.epsilon * self.mu)
        if self.c_light is None:
            object.__setattr__(self, "c_light", float(c))
        elif abs(self.c_light * np.sqrt(self.epsilon * self.mu) - 1.0) > 1e-14:
            raise ValueError("c_light must equal 1/sqrt(epsilon*mu)")

    @property
    def is_vacuum(self) -> bool:
        return self.epsilon == 1.0 and self.mu == 1.0


VACUUM = PhysicalConstants()


@dataclass(frozen=True)
class FieldState:
    grid: GridSpec
    D: np.ndarray
    B: np.ndarray
    time: float = 0.0
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        for name in ("D", "B"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) + self.grid.n:
                raise ValueError(f"{name} has shape {v.shape}, expected {(3,) + self.grid.n}")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, v)

    @property
    def E(self) -> np.ndarray:
        return self.D / self.constants.epsilon

    @property
    def H(self) -> np.ndarray:
        return self.B / self.constants.mu

    def with_fields(self, D, B, time=None) -> FieldState:
        return replace(self, D=D, B=B, time=self.time if time is None else time)

    def scaled(self, lam: float) -> FieldState:
        return self.with_fields(lam * self.D, lam * self.B)

    def divergence_residual(self) -> float:
        return max(relative_divergence(self.D, self.grid), relative_divergence(self.B, self.grid))

    def check(self, tol: float = DIVERGENCE_TOL) -> None:
        """Raise if the divergence constraints or zero-mean condition fail."""
        res = self.divergence_residual()
        if res > tol:
            raise ValueError(f"divergence residual {res:.2e} exceeds {tol:.0e}")
        for name in ("D", "B"):
            v = getattr(self, name)
            scale = np.max(np.abs(v), initial=0.0)
            if scale > 0 and np.max(np.abs(v.mean(axis=AXES))) > 1e-12 * scale:
                raise ValueError(f"{name} is not zero-mean")

    def norm(self) -> float:
        """L2 norm of the pair (D/sqrt(eps), B/sqrt(mu))."""
        c = self.constants
        return float(np.hypot(norm(self.D, self.grid) / np.sqrt(c.epsilon), norm(self.B, self.grid) / np.sqrt(c.mu)))


# ---------------------------------------------------------------------------
# source specifications


@dataclass(frozen=True)
class PlaneWave:
    """Single propagating mode; ``k`` is the integer mode-number triple."""

    k: tuple[float, float, float]
    polarization: Polarization = "circular_plus"
    amplitude: float = 1.0


@dataclass(frozen=True)
class GaussianPacket:
    """Gaussian spectrum around ``center_k`` (mode numbers), ``width_k`` in
    lattice spacings, centred at ``center_r`` (measured from the box centre)."""

    center_k: tuple[float, float, float]
    width_k: float
    center_r: tuple[float, float, float] = (0.0, 0.0, 0.0)
    polarization: Polarization = "circular_plus"
    amplitude: float = 1.0


@dataclass(frozen=True)
class RandomTransverse:
    """Independent complex Gaussian modes with envelope |m|^-exponent, |m| <= cutoff."""

    seed: int
    exponent: float = 1.0
    cutoff: float = 4.0
    amplitude: float = 1.0


@dataclass(frozen=True)
class LocalizedRandom:
    """D and B as curls of random Gaussian blobs near the box centre.

    Exactly transverse and localized (no 1/k tails), so position-weighted
    integrals are meaningful. ``width`` and ``spread`` are fractions of the box.
    """

    seed: int
    n_blobs: int = 3
    width: float = 1 / 16
    spread: float = 0.04
    max_carrier: int = 2
    amplitude: float = 1.0


SourceSpec = Union[PlaneWave, GaussianPacket, RandomTransverse, LocalizedRandom]


def _check_polarization(p):
    if p not in POLARIZATIONS:
        raise ValueError(f"polarization must be one of {POLARIZATIONS}, got {p!r}")


def reference_axis(direction: np.ndarray) -> np.ndarray:
    """Unit vector perpendicular to ``direction`` built from the least aligned lattice axis."""
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    u = np.zeros(3)
    u[int(np.argmin(np.abs(d)))] = 1.0
    u = u - (u @ d) * d
    return u / np.linalg.norm(u)


def helicity_basis(khat: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """e_+ and e_- for unit vectors ``khat`` of shape (3, ...).

    e1 is the projection of the fixed axis ``u`` orthogonal to khat, e2 = khat x e1,
    e_pm = (e1 +- i e2)/sqrt(2), so that khat x e_pm = -+ i e_pm.
    """
    u = np.asarray(u, float).reshape((3,) + (1,) * (khat.ndim - 1))
    e1 = u - np.sum(u * khat, axis=0) * khat
    n1 = np.sqrt(np.sum(e1**2, axis=0))
    e1 = np.where(n1 > 1e-12, e1 / np.where(n1 > 1e-12, n1, 1.0), 0.0)
    e2 = np.stack(
        [
            khat[1] * e1[2] - khat[2] * e1[1],
            khat[2] * e1[0] - khat[0] * e1[2],
            khat[0] * e1[1] - khat[1] * e1[0],
        ]
    )
    ep = (e1 + 1j * e2) / np.sqrt(2)
    em = (e1 - 1j * e2) / np.sqrt(2)
    return ep, em


def _polarization_vector(khat, u, polarization):
    ep, em = helicity_basis(khat, u)
    if polarization == "circular_plus":
        return np.sqrt(2) * ep
    if polarization == "circular_minus":
        return np.sqrt(2) * em
    return np.real(ep + em) / np.sqrt(2) + 0j  # e1


def _from_positive_frequency(a: np.ndarray, grid: GridSpec, constants: PhysicalConstants):
    """Real (D, B) whose positive-frequency amplitudes are ``a`` (spectral, not Hermitian).

    Every mode k carries a wave travelling along +k with b = sqrt(eps mu) khat x a / eps.
    """
    ba = np.sqrt(constants.epsilon * constants.mu) / constants.epsilon * np.cross(grid.khat, a, axis=0)
    D = scipy.fft.ifftn(a, axes=AXES).real * (grid.npoints / grid.volume)
    B = scipy.fft.ifftn(ba, axes=AXES).real * (grid.npoints / grid.volume)
    return D, B


def _mode_numbers_on_lattice(k):
    k = np.asarray(k, float)
    if k.shape != (3,) or np.any(np.abs(k - np.round(k)) > 1e-9):
        raise ValueError(f"plane-wave wavevector {tuple(k)} is not on the lattice (integer mode numbers required)")
    return np.round(k).astype(int)


def make_state(spec: SourceSpec, grid: GridSpec, constants: PhysicalConstants | None = None) -> FieldState:
    constants = constants or PhysicalConstants()
    if not np.isfinite(getattr(spec, "amplitude", 1.0)):
        raise ValueError("amplitude must be finite")

    if isinstance(spec, PlaneWave):
        _check_polarization(spec.polarization)
        m = _mode_numbers_on_lattice(spec.k)
        if np.all(m == 0):
            raise ValueError("plane wave needs a nonzero wavevector")
        for a in range(3):
            if abs(m[a]) >= grid.n[a] // 2:
                raise ValueError(f"mode number {m[a]} on axis {a} reaches the Nyquist row")
        kvec = m * np.array(grid.dk)
        khat = kvec / np.linalg.norm(kvec)
        pol = _polarization_vector(khat.reshape(3, 1), reference_axis(khat), spec.polarization)[:, 0]
        a = np.zeros((3,) + grid.n, complex)
        idx = tuple(int(v) % n for v, n in zip(m, grid.n))
        # real-space D = Re[amplitude * pol * exp(i k.r)] with r = index * spacing
        a[(slice(None),) + idx] = spec.amplitude * pol * grid.volume
        D, B = _from_positive_frequency(a, grid, constants)

    elif isinstance(spec, GaussianPacket):
        _check_polarization(spec.polarization)
        if spec.width_k < 2:
            raise ValueError(f"packet width_k = {spec.width_k} below the resolution floor of 2 lattice spacings")
        kc = np.asarray(spec.center_k, float) * np.array(grid.dk)
        if np.linalg.norm(kc) == 0:
            raise ValueError("packet needs a nonzero centre wavevector")
        w = spec.width_k * min(grid.dk)
        # envelope on the true wavevector; Nyquist rows stay empty (their
        # effective wavevector would otherwise look like a low-k mode)
        diff = grid.k - kc.reshape(3, 1, 1, 1)
        env = np.exp(-np.sum(diff**2, axis=0) / (2 * w**2)) * grid.live * ~grid.nyquist_rows
        k = grid.k_eff
        # r measured from index 0 in the transform; centre_r is from the box centre
        R = np.asarray(spec.center_r, float) + np.array(grid.box) / 2
        phase = np.exp(-1j * np.tensordot(R, k, axes=(0, 0)))
        pol = _polarization_vector(grid.khat, reference_axis(kc), spec.polarization)
        a = env * phase * pol
        D, B = _from_positive_frequency(a, grid, constants)
        peak = np.sqrt(np.max(np.sum(D**2, axis=0)))
        scale = spec.amplitude / peak if peak > 0 else 0.0
        D, B = D * scale, B * scale

    elif isinstance(spec, RandomTransverse):
        D = random_transverse_field(grid, spec.seed, spec.exponent, spec.cutoff, stream=0)
        B = random_transverse_field(grid, spec.seed, spec.exponent, spec.cutoff, stream=1)
        peak = np.sqrt(np.max(np.sum(D**2, axis=0)))
        D, B = D * (spec.amplitude / peak), B * (spec.amplitude / peak)

    elif isinstance(spec, LocalizedRandom):
        D, B = _localized_random(grid, spec)

    else:
        raise TypeError(f"unknown source spec {spec!r}")

    state = FieldState(grid, D, B, 0.0, constants)
    state.check()
    return state


def random_transverse_field(grid: GridSpec, seed: int, exponent: float = 1.0, cutoff: float = 4.0, stream: int = 0):
    """Band-limited, zero-mean, divergence-free real field from a seeded complex Gaussian."""
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, stream])
    coeffs = rng.standard_normal((3,) + grid.n) + 1j * rng.standard_normal((3,) + grid.n)
    m = np.sqrt(sum((np.broadcast_to(mi, grid.n) * (kd / min(grid.dk))) ** 2 for mi, kd in zip(grid.mode_index, grid.dk)))
    live = grid.live & (m <= cutoff)
    env = np.where(live, np.where(m > 0, m, 1.0) ** (-float(exponent)), 0.0)
    f = to_real(to_spectral_from_coeffs(coeffs * env, grid), grid, check=False)
    f = transverse_project(f, grid)
    return remove_mean(f)


def to_spectral_from_coeffs(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    # symmetrize so the inverse transform is real
    flipped = np.roll(np.flip(c, axis=AXES), 1, axis=AXES)
    return 0.5 * (c + np.conj(flipped)) * grid.volume


def _localized_random(grid: GridSpec, spec: LocalizedRandom):
    rng = np.random.default_rng(int(spec.seed) & 0xFFFFFFFFFFFFFFFF)
    L = np.array(grid.box)
    x = grid.positions
    pots = []
    for _ in range(2):
        a = np.zeros((3,) + grid.n)
        for _b in range(spec.n_blobs):
            c = rng.uniform(-spec.spread, spec.spread, 3) * L
            sigma = spec.width * min(L) * rng.uniform(0.8, 1.2)
            v = rng.standard_normal(3)
            m = rng.integers(-spec.max_carrier, spec.max_carrier + 1, 3)
            phi = rng.uniform(0, 2 * np.pi)
            d = x - c.reshape(3, 1, 1, 1)
            g = np.exp(-np.sum(d**2, axis=0) / (2 * sigma**2))
            carrier = np.cos(np.tensordot(m * np.array(grid.dk), d, axes=(0, 0)) + phi)
            a += v.reshape(3, 1, 1, 1) * g * carrier
        pots.append(a)
    D = curl(pots[0], grid)
    B = curl(pots[1], grid)
    peak = max(np.sqrt(np.max(np.sum(D**2, axis=0))), np.sqrt(np.max(np.sum(B**2, axis=0))))
    return D * (spec.amplitude / peak), B * (spec.amplitude / peak)


# ---------------------------------------------------------------------------


def enforce_constraints(state: FieldState) -> FieldState:
    D = remove_mean(transverse_project(state.D, state.grid))
    B = remove_mean(transverse_project(state.B, state.grid))
    return state.with_fields(D, B)


def perturb(state: FieldState, seed: int, magnitude: float, exponent: float = 1.0, cutoff: float = 4.0) -> FieldState:
    """Add a seeded random transverse pair whose (D/sqrt(eps), B/sqrt(mu)) norm is ``magnitude``."""
    if magnitude < 0:
        raise ValueError("magnitude must be >= 0")
    if magnitude == 0:
        return state
    c = state.constants
    hD = random_transverse_field(state.grid, seed, exponent, cutoff, stream=2)
    hB = random_transverse_field(state.grid, seed, exponent, cutoff, stream=3)
    n = np.hypot(norm(hD, state.grid) / np.sqrt(c.epsilon), norm(hB, state.grid) / np.sqrt(c.mu))
    s = magnitude / n
    return state.with_fields(state.D + s * hD, state.B + s * hB)
