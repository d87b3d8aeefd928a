"""Periodic grids, Fourier transforms and the nonlocal multiplier kernels.

Fields are plain numpy arrays. A vector field has shape ``(3, nx, ny, nz)``,
a scalar field ``(nx, ny, nz)``; the grid travels alongside as a ``GridSpec``.

Transform convention::

    forward   d(k) = dV * sum_r f(r) exp(-i k.r)
    inverse   f(r) = (1/V) * sum_k d(k) exp(+i k.r)

so that the continuum pairs 1/|r| <-> 4 pi/k^2 and 1/|r|^2 <-> 2 pi^2/k apply
without extra factors.

Every direction-dependent multiplier uses the *effective* wavevector, in which
a component sitting on its Nyquist row is set to zero. This keeps derivatives,
curls and projectors of real fields real. Modes whose effective wavevector
vanishes (k = 0 and the all-Nyquist corner) are annihilated by every kernel.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft
import scipy.special

AXES = (-3, -2, -1)

# Hermitian-symmetry tolerance used when returning to real space.
IMAG_TOLERANCE = 1e-11

_workers = 1


def set_workers(n: int) -> None:
    """Number of threads handed to scipy.fft."""
    global _workers
    _workers = max(1, int(n))


@dataclass(frozen=True)
class GridSpec:
    n: tuple[int, int, int]
    box: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        n = tuple(int(v) for v in np.broadcast_to(self.n, 3))
        box = tuple(float(v) for v in np.broadcast_to(self.box, 3))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "box", box)
        for v in n:
            if v < 8 or v % 2:
                raise ValueError(f"grid points per axis must be even and >= 8, got {n}")
        for v in box:
            if not (v > 0 and np.isfinite(v)):
                raise ValueError(f"box lengths must be positive and finite, got {box}")

    @classmethod
    def cube(cls, n: int, length: float = 1.0) -> GridSpec:
        return cls((n, n, n), (length, length, length))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.n

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(L / n for L, n in zip(self.box, self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.box))

    @property
    def npoints(self) -> int:
        return int(np.prod(self.n))

    @property
    def dk(self) -> tuple[float, float, float]:
        """Wavevector lattice spacing per axis."""
        return tuple(2 * np.pi / L for L in self.box)

    @cached_property
    def mode_index(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Signed integer mode numbers per axis, broadcastable to the grid."""
        out = []
        for axis, n in enumerate(self.n):
            m = np.fft.fftfreq(n, 1.0 / n).round().astype(int)
            shape = [1, 1, 1]
            shape[axis] = n
            out.append(m.reshape(shape))
        return tuple(out)

    @cached_property
    def k(self) -> np.ndarray:
        """True lattice wavevector, shape (3, nx, ny, nz)."""
        m = self.mode_index
        return np.stack(
            [np.broadcast_to(m[a] * self.dk[a], self.n).astype(float) for a in range(3)]
        )

    @cached_property
    def k_eff(self) -> np.ndarray:
        """Wavevector with Nyquist-row components zeroed."""
        m = self.mode_index
        comps = []
        for a in range(3):
            ka = m[a] * self.dk[a]
            ka = np.where(np.abs(m[a]) == self.n[a] // 2, 0.0, ka)
            comps.append(np.broadcast_to(ka, self.n).astype(float))
        return np.stack(comps)

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.k_eff**2, axis=0)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def live(self) -> np.ndarray:
        """Boolean mask of modes not annihilated by the zero-mode policy."""
        return self.k2 > 0

    @cached_property
    def khat(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.live, self.k_eff / np.where(self.live, self.kmag, 1.0), 0.0)

    @cached_property
    def nyquist_rows(self) -> np.ndarray:
        """True on modes with any component on its axis' Nyquist row."""
        out = np.zeros(self.n, bool)
        for m, n in zip(self.mode_index, self.n):
            out |= np.abs(m) == n // 2
        return out

    @cached_property
    def positions(self) -> np.ndarray:
        """Coordinates measured from the box centre, in [-L/2, L/2), no wrapping."""
        # index i sits at i*dx; the centre (index n/2) is the origin
        comps = [np.arange(n) * h - L / 2 for n, h, L in zip(self.n, self.spacing, self.box)]
        grids = np.meshgrid(*comps, indexing="ij")
        return np.stack(grids)

    @cached_property
    def min_image(self) -> np.ndarray:
        """Minimum-image displacement of each lattice point from the origin."""
        comps = []
        for a in range(3):
            m = np.fft.fftfreq(self.n[a], 1.0 / self.n[a]).round()
            comps.append(m * self.spacing[a])
        return np.stack(np.meshgrid(*comps, indexing="ij"))

    @property
    def kappa(self) -> float:
        """Operator norm of the spectral curl on this grid (largest |k_eff|)."""
        return float(self.kmag.max())


# ---------------------------------------------------------------------------
# transforms


def to_spectral(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    return grid.cell_volume * scipy.fft.fftn(f, axes=AXES, workers=_workers)


def to_real(s: np.ndarray, grid: GridSpec, check: bool = True) -> np.ndarray:
    f = scipy.fft.ifftn(s, axes=AXES, workers=_workers) / grid.cell_volume
    if check:
        scale = np.max(np.abs(f.real), initial=0.0)
        bad = np.max(np.abs(f.imag), initial=0.0)
        if bad > IMAG_TOLERANCE * max(scale, np.finfo(float).tiny):
            raise ValueError(
                f"spectral coefficients violate Hermitian symmetry (imag/real = {bad / max(scale, 1e-300):.2e})"
            )
    return np.ascontiguousarray(f.real)


def hermitian_defect(s: np.ndarray) -> float:
    """max |c(-k) - conj(c(k))| / max |c|."""
    flipped = np.roll(np.flip(s, axis=AXES), 1, axis=AXES)
    scale = np.max(np.abs(s), initial=0.0)
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(flipped - np.conj(s))) / scale)


def inner(f: np.ndarray, g: np.ndarray, grid: GridSpec) -> float:
    """L2 grid inner product  sum f.g dV."""
    return float(np.sum(f * g) * grid.cell_volume)


def norm(f: np.ndarray, grid: GridSpec) -> float:
    return float(np.sqrt(inner(f, f, grid)))


def integrate(f: np.ndarray, grid: GridSpec) -> np.ndarray | float:
    """Sum over the trailing three grid axes times the cell volume."""
    out = np.sum(f, axis=AXES) * grid.cell_volume
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# kernels


class KernelKind(str, enum.Enum):
    INV_R = "inv_r"
    INV_R2 = "inv_r2"
    INV_HBAR_CK = "inv_hbar_ck"
    TRANSVERSE = "transverse_projector"
    DERIVATIVE = "derivative"
    CURL = "curl"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    axis: int | None = None
    hbar: float = 1.0
    c_light: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind is KernelKind.DERIVATIVE and self.axis not in (0, 1, 2):
            raise ValueError("derivative kernel needs axis in {0, 1, 2}")

    # zero-mode policy is fixed
    zero_mode_policy = "annihilate"


def scalar_multiplier(grid: GridSpec, kind: KernelKind | str, hbar=1.0, c_light=1.0) -> np.ndarray:
    kind = KernelKind(kind)
    live = grid.live
    safe = np.where(live, grid.kmag, 1.0)
    if kind is KernelKind.INV_R:
        m = 4 * np.pi / safe**2
    elif kind is KernelKind.INV_R2:
        m = 2 * np.pi**2 / safe
    elif kind is KernelKind.INV_HBAR_CK:
        m = 1.0 / (hbar * c_light * safe)
    else:
        raise ValueError(f"{kind.value} is not a scalar multiplier")
    return np.where(live, m, 0.0)


def apply_kernel(s: np.ndarray, grid: GridSpec, kernel: KernelSpec | str) -> np.ndarray:
    """Multiply spectral coefficients by a kernel's Fourier multiplier.

    Scalar kernels act componentwise on any leading shape; the projector and
    curl need a leading axis of length 3.
    """
    if not isinstance(kernel, KernelSpec):
        kernel = KernelSpec(kernel)
    kind = kernel.kind
    if kind in (KernelKind.INV_R, KernelKind.INV_R2, KernelKind.INV_HBAR_CK):
        return s * scalar_multiplier(grid, kind, kernel.hbar, kernel.c_light)
    if kind is KernelKind.DERIVATIVE:
        return s * (1j * grid.k_eff[kernel.axis])
    if kind is KernelKind.CURL:
        return 1j * _cross(grid.k_eff, s)
    if kind is KernelKind.TRANSVERSE:
        kh = grid.khat
        return (s - kh * np.sum(kh * s, axis=0)) * grid.live
    raise ValueError(kind)


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise cross product of two (3, ...) arrays."""
    return _cross(a, b)


def dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=0)


# ---------------------------------------------------------------------------
# real-space conveniences built on the multipliers


def filter_real(f: np.ndarray, grid: GridSpec, kernel: KernelSpec | str) -> np.ndarray:
    return to_real(apply_kernel(to_spectral(f, grid), grid, kernel), grid)


def transverse_project(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    return filter_real(f, grid, KernelKind.TRANSVERSE)


def curl(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    return filter_real(f, grid, KernelKind.CURL)


def gradient(phi: np.ndarray, grid: GridSpec) -> np.ndarray:
    s = to_spectral(phi, grid)
    return to_real(1j * grid.k_eff * s, grid)


def divergence(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    s = to_spectral(f, grid)
    return to_real(1j * np.sum(grid.k_eff * s, axis=0), grid)


def derivative(f: np.ndarray, grid: GridSpec, axis: int) -> np.ndarray:
    return filter_real(f, grid, KernelSpec(KernelKind.DERIVATIVE, axis=axis))


def remove_mean(f: np.ndarray) -> np.ndarray:
    return f - np.mean(f, axis=AXES, keepdims=True)


def relative_divergence(f: np.ndarray, grid: GridSpec) -> float:
    """||div f|| / (kappa ||f||), the scale-free divergence residual."""
    nf = norm(f, grid)
    if nf == 0:
        return 0.0
    return norm(divergence(f, grid), grid) / (grid.kappa * nf)


# ---------------------------------------------------------------------------
# direct real-space convolution (oracle for the multipliers)


def lattice_zeta(s: float, spacing) -> float:
    """Epstein zeta  sum' |lambda|^(-2s)  over the orthorhombic lattice ``spacing``.

    Analytic continuation by the theta-function split at t = 1; valid for
    0 < s < 3/2, s != 3/2.
    """
    h = np.asarray(spacing, float)
    scale = np.prod(h) ** (1 / 3)
    a = h / scale
    v = float(np.prod(a))

    def shell(step):
        m = [np.arange(-int(np.ceil(7 / x)), int(np.ceil(7 / x)) + 1) * x for x in step]
        pts = np.stack(np.meshgrid(*m, indexing="ij")).reshape(3, -1)
        x = np.pi * np.sum(pts**2, axis=0)
        return x[x > 0]

    def upper(p, x):
        return scipy.special.gammaincc(p, x) * scipy.special.gamma(p) / x**p

    direct = upper(s, shell(a)).sum()
    dual = upper(1.5 - s, shell(1 / a)).sum() / v
    z = np.pi**s / scipy.special.gamma(s) * (direct + dual - 1 / s + 1 / (v * (s - 1.5)))
    return float(z * scale ** (-2 * s))


def real_space_kernel(grid: GridSpec, kind: KernelKind | str, self_term: str = "corrected") -> np.ndarray:
    """Minimum-image samples of 1/|r| or 1/|r|^2 for the direct sum.

    ``self_term="corrected"`` puts -Z(s) at r = 0, with Z the lattice zeta
    function. That is the weight that makes the punctured trapezoid rule
    exact for the singular part of the integrand, leaving an error that is
    high order in the spacing. ``self_term="zero"`` drops the self cell.
    """
    kind = KernelKind(kind)
    r = np.sqrt(np.sum(grid.min_image**2, axis=0))
    safe = np.where(r > 0, r, 1.0)
    if kind is KernelKind.INV_R:
        K, s = 1.0 / safe, 0.5
    elif kind is KernelKind.INV_R2:
        K, s = 1.0 / safe**2, 1.0
    else:
        raise ValueError(f"no direct real-space form for {kind.value}")
    K = np.where(r > 0, K, 0.0)
    if self_term == "corrected":
        K.flat[0] = -lattice_zeta(s, grid.spacing)
    elif self_term != "zero":
        raise ValueError(f"self_term must be 'corrected' or 'zero', got {self_term!r}")
    return K


def convolve_direct(
    f: np.ndarray,
    grid: GridSpec,
    kind: KernelKind | str,
    mean_tol: float = 1e-10,
    self_term: str = "corrected",
) -> np.ndarray:
    """O(N^2) direct sum  out(r) = sum_r' K(r - r') f(r') dV.

    Input must be zero-mean per component; the k = 0 content is where the
    direct sum and the multiplier disagree by construction. Points whose
    minimum-image cell cuts through the support of ``f`` see a truncated
    kernel, so agreement with the multiplier is only expected where that
    cell contains the whole source.
    """
    f = np.asarray(f, dtype=float)
    lead = f.shape[:-3]
    flat = f.reshape((-1,) + grid.n)
    scale = np.max(np.abs(flat), initial=0.0)
    means = np.abs(flat.mean(axis=AXES))
    if scale > 0 and np.any(means > mean_tol * scale):
        raise ValueError("convolve_direct needs zero-mean input (k = 0 content is ill-posed)")
    K = real_space_kernel(grid, kind, self_term)
    out = np.empty_like(flat)
    for c in range(flat.shape[0]):
        out[c] = _direct_sum(K, np.ascontiguousarray(flat[c]))
    return out.reshape(lead + grid.n) * grid.cell_volume


def _direct_sum_numpy(K, f):
    nx, ny, nz = f.shape
    out = np.zeros_like(f)
    for dx in range(nx):
        fx = np.roll(f, dx, axis=0)
        for dy in range(ny):
            fxy = np.roll(fx, dy, axis=1)
            for dz in range(nz):
                w = K[dx, dy, dz]
                if w != 0.0:
                    out += w * np.roll(fxy, dz, axis=2)
    return out


try:
    import numba

    @numba.njit(cache=True)
    def _direct_sum(K, f):
        nx, ny, nz = f.shape
        out = np.zeros_like(f)
        for dx in range(nx):
            for dy in range(ny):
                for dz in range(nz):
                    w = K[dx, dy, dz]
                    if w == 0.0:
                        continue
                    for x in range(nx):
                        sx = x - dx
                        if sx < 0:
                            sx += nx
                        for y in range(ny):
                            sy = y - dy
                            if sy < 0:
                                sy += ny
                            for z in range(nz):
                                sz = z - dz
                                if sz < 0:
                                    sz += nz
                                out[x, y, z] += w * f[sx, sy, sz]
        return out

except ImportError:  # pragma: no cover
    _direct_sum = _direct_sum_numpy
