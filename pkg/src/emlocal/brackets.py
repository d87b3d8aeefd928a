"""Poisson brackets of smeared densities and the locality certifier.

The canonical structure on (D, B) is

    {F, G} = integral [ curl(dF/dD) . dG/dB  -  curl(dG/dD) . dF/dB ]

whose sign makes {F, H} = dF/dt for H = integral T^00.

A smeared density F = integral f(r) rho(r) has a gradient of the form
f * (band-limited field) plus, for nonlocal densities, a convolution kernel
applied to such a product. ``curl(dF/dD)`` is evaluated with the product
rule  curl(f u) = grad f x u + f curl u  using the analytic gradient of the
smear; the curl of a band-limited field is exact spectrally. The result is
supported where f is, so a bracket between local densities smeared over
disjoint regions is zero pointwise, not just up to spectral leakage. Any
nonlocality comes from the multipliers (1/k, 1/k^2, the transverse
projector) that the density itself carries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.fft
from scipy.spatial import cKDTree

from .dynamics import plan_for, propagate
from .fields import FieldState, PhysicalConstants, RandomTransverse, make_state
from .observables import (
    LEVI_CIVITA,
    energy_density,
    helicity,
    maxwell_stress,
    momentum_density,
    photon_density,
    spin_density,
    orbital_density,
    total_J,
    vector_potential,
)
from .spectral import (
    GridSpec,
    KernelKind,
    apply_kernel,
    cross,
    curl,
    dot,
    inner,
    integrate,
    norm,
    to_real,
    to_spectral,
)

LOCAL_THRESHOLD = 1e-9
NONLOCAL_THRESHOLD = 1e-3
MASK_THRESHOLD = 1e-12

AXIS_NAMES = "xyz"
UNIT = np.eye(3).reshape(3, 3, 1, 1, 1)


# ---------------------------------------------------------------------------
# smearing


@dataclass(frozen=True, eq=False)
class SmearFunction:
    """Compactly supported bump  f = exp(-a rho^2 / (1 - rho^2)),  rho = |r - c| / R < 1."""

    grid: GridSpec
    center: tuple[float, float, float]
    radius: float
    sharpness: float = 1.0
    id: str = "f"
    values: np.ndarray = field(init=False, repr=False)
    grad: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        g = self.grid
        c = np.asarray(self.center, float).reshape(3, 1, 1, 1)
        L = np.array(g.box).reshape(3, 1, 1, 1)
        d = g.positions - c
        d = d - L * np.round(d / L)  # minimum image
        rho2 = np.sum(d**2, axis=0) / self.radius**2
        inside = rho2 < 1
        safe = np.where(inside, 1 - rho2, 1.0)
        a = self.sharpness
        f = np.where(inside, np.exp(-a * rho2 / safe), 0.0)
        dfdr2 = np.where(inside, -a / safe**2, 0.0) * f  # d f / d(rho^2)
        grad = 2 * dfdr2 * d / self.radius**2
        object.__setattr__(self, "values", f)
        object.__setattr__(self, "grad", grad)
        if self.support_mask.mean() >= 0.5:
            raise ValueError(f"smear {self.id!r} covers {self.support_mask.mean():.0%} of the box (limit 50%)")

    @property
    def support_mask(self) -> np.ndarray:
        return self.values > MASK_THRESHOLD * self.values.max()

    @property
    def spectral_tail(self) -> float:
        """Largest spectral magnitude on the Nyquist shell relative to the peak."""
        s = np.abs(scipy.fft.fftn(self.values))
        nyq = np.zeros(self.grid.n, bool)
        for a, (m, n) in enumerate(zip(self.grid.mode_index, self.grid.n)):
            nyq |= np.broadcast_to(np.abs(m) == n // 2, self.grid.n)
        return float(s[nyq].max() / s.max())

    def mul(self, u: np.ndarray) -> np.ndarray:
        return self.values * u

    def curl_of_product(self, u: np.ndarray, curl_u: np.ndarray | None = None) -> np.ndarray:
        """curl(f u) for a band-limited vector field u."""
        if curl_u is None:
            curl_u = curl(u, self.grid)
        return cross(self.grad, u) + self.values * curl_u


def bump(grid: GridSpec, center, radius: float, id: str = "f", sharpness: float = 1.0) -> SmearFunction:
    return SmearFunction(grid, tuple(float(v) for v in center), float(radius), float(sharpness), id)


def separation(f: SmearFunction, g: SmearFunction) -> float:
    """Minimum periodic distance between the two support masks (0 if they overlap)."""
    if f.grid != g.grid:
        raise ValueError("smears live on different grids")
    if np.any(f.support_mask & g.support_mask):
        return 0.0
    grid = f.grid
    h = np.array(grid.spacing)
    idx_f = np.argwhere(f.support_mask) * h
    idx_g = np.argwhere(g.support_mask) * h
    box = np.array(grid.box)
    tree = cKDTree(np.mod(idx_g, box), boxsize=box)
    dist, _ = tree.query(np.mod(idx_f, box), k=1)
    return float(dist.min())


# ---------------------------------------------------------------------------
# observables


Gradient = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True, eq=False)
class Observable:
    """A quadratic functional of (D, B) with its functional gradient.

    ``curl_grad_D`` returns curl(dF/dD); when absent the curl is taken
    spectrally.
    """

    id: str
    evaluate: Callable[[FieldState], float]
    gradient: Callable[[FieldState], Gradient]
    curl_grad_D: Callable[[FieldState], np.ndarray] | None = None
    smear: SmearFunction | None = None

    def __call__(self, state: FieldState) -> float:
        return self.evaluate(state)

    def curl_gradient(self, state: FieldState) -> np.ndarray:
        if self.curl_grad_D is not None:
            return self.curl_grad_D(state)
        return curl(self.gradient(state)[0], state.grid)

    def __mul__(self, a: float) -> Observable:
        return linear_combination([(a, self)])

    __rmul__ = __mul__

    def __add__(self, other: Observable) -> Observable:
        return linear_combination([(1.0, self), (1.0, other)])

    def __neg__(self) -> Observable:
        return linear_combination([(-1.0, self)])


def linear_combination(terms: Sequence[tuple[float, Observable]]) -> Observable:
    terms = list(terms)

    def ev(s):
        return sum(a * F.evaluate(s) for a, F in terms)

    def gr(s):
        gs = [(a, F.gradient(s)) for a, F in terms]
        return sum(a * g[0] for a, g in gs), sum(a * g[1] for a, g in gs)

    def cg(s):
        return sum(a * F.curl_gradient(s) for a, F in terms)

    name = " + ".join(f"{a:g}*{F.id}" for a, F in terms)
    return Observable(name, ev, gr, cg)


def _spectral(f, grid, *kinds):
    s = to_spectral(f, grid)
    for k in kinds:
        s = apply_kernel(s, grid, k)
    return to_real(s, grid)


def _T(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Self-adjoint map B -> A_perp:  curl (1/4 pi |r|) *."""
    return _spectral(f, grid, KernelKind.INV_R, KernelKind.CURL) / (4 * np.pi)


def _angular(u: np.ndarray, grid: GridSpec, a: int) -> np.ndarray:
    """L_a u = eps_abc x_b d_c u, componentwise on u (shape (3, ...))."""
    x = grid.positions
    s = to_spectral(u, grid)
    out = np.zeros_like(u)
    for b in range(3):
        for c in range(3):
            e = LEVI_CIVITA[a, b, c]
            if e:
                out += e * x[b] * to_real(1j * grid.k_eff[c] * s, grid)
    return out


def _parse_density(name: str) -> tuple[str, int | None]:
    base, _, comp = name.partition("_")
    if comp:
        if comp not in AXIS_NAMES:
            raise ValueError(f"bad component in {name!r}")
        return base, AXIS_NAMES.index(comp)
    return base, None


DENSITIES = ("energy", "momentum", "photon", "spin", "orbital")


def density_field(name: str) -> Callable[[FieldState], np.ndarray]:
    """Pointwise density by name, e.g. 'energy', 'momentum_z', 'spin_x'."""
    base, comp = _parse_density(name)
    fn = {
        "energy": energy_density,
        "momentum": momentum_density,
        "photon": photon_density,
        "spin": spin_density,
        "orbital": orbital_density,
    }[base]
    if comp is None:
        return fn
    return lambda s: fn(s)[comp]


def smear(density: str, f: SmearFunction) -> Observable:
    """Smeared density  F = integral f(r) rho(r)  with its analytic gradient."""
    base, a = _parse_density(density)
    if base not in DENSITIES:
        raise ValueError(f"unknown density {density!r}; choose from {DENSITIES}")
    if base in ("momentum", "spin", "orbital") and a is None:
        raise ValueError(f"{base} density needs a component suffix, e.g. {base}_z")
    rho = density_field(density)
    grid = f.grid

    def check(s: FieldState):
        if s.grid != grid:
            raise ValueError("state and smear live on different grids")

    def evaluate(s):
        check(s)
        return integrate(f.values * rho(s), grid)

    if base == "energy":

        def gradient(s):
            c = s.constants
            return f.mul(s.D) / c.epsilon, f.mul(s.B) / c.mu

        def curl_gD(s):
            return f.curl_of_product(s.D) / s.constants.epsilon

    elif base == "momentum":
        e = UNIT[a]

        def gradient(s):
            c = s.constants.c_light
            return c * f.mul(cross(s.B, e)), c * f.mul(cross(e, s.D))

        def curl_gD(s):
            return s.constants.c_light * f.curl_of_product(cross(s.B, np.broadcast_to(e, s.B.shape)))

    elif base == "photon":

        def _parts(s):
            c = s.constants
            p = 1.0 / (4 * np.pi**2 * c.hbar * c.c_light)
            return c, p

        def gradient(s):
            c, p = _parts(s)
            gD = p / c.epsilon * (f.mul(_spectral(s.D, grid, KernelKind.INV_R2)) + _spectral(f.mul(s.D), grid, KernelKind.INV_R2))
            gB = p / c.mu * (f.mul(_spectral(s.B, grid, KernelKind.INV_R2)) + _spectral(f.mul(s.B), grid, KernelKind.INV_R2))
            return gD, gB

        def curl_gD(s):
            c, p = _parts(s)
            local = f.curl_of_product(_spectral(s.D, grid, KernelKind.INV_R2))
            nonlocal_ = _spectral(f.mul(s.D), grid, KernelKind.INV_R2, KernelKind.CURL)
            return p / c.epsilon * (local + nonlocal_)

    elif base == "spin":
        e = UNIT[a]

        def gradient(s):
            A = vector_potential(s)
            return f.mul(cross(A, e)), _T(f.mul(cross(e, s.D)), grid)

        def curl_gD(s):
            A = vector_potential(s)
            return f.curl_of_product(cross(A, np.broadcast_to(e, A.shape)))

    else:  # orbital

        def gradient(s):
            A = vector_potential(s)
            return f.mul(_angular(A, grid, a)), -_T(_angular(f.mul(s.D), grid, a), grid)

        def curl_gD(s):
            # f L_a A = sum_bc eps_abc (f x_b) d_c A, product rule on each term
            A = vector_potential(s)
            x = grid.positions
            sA = to_spectral(A, grid)
            out = np.zeros_like(A)
            for b in range(3):
                for c in range(3):
                    eps = LEVI_CIVITA[a, b, c]
                    if not eps:
                        continue
                    u_hat = 1j * grid.k_eff[c] * sA
                    u = to_real(u_hat, grid)
                    curl_u = to_real(apply_kernel(u_hat, grid, KernelKind.CURL), grid)
                    phi = f.values * x[b]
                    grad_phi = x[b] * f.grad + f.values * UNIT[b]
                    out += eps * (cross(grad_phi, u) + phi * curl_u)
            return out

    return Observable(f"{density}({f.id})", evaluate, gradient, curl_gD, f)


# totals -------------------------------------------------------------------


def _inv_k(grid, f):
    return to_real(apply_kernel(to_spectral(f, grid), grid, KernelKind.INV_HBAR_CK), grid)


def energy_observable() -> Observable:
    def ev(s):
        return integrate(energy_density(s), s.grid)

    def gr(s):
        return s.E, s.H

    return Observable("H", ev, gr)


def photon_number_observable() -> Observable:
    from .observables import photon_number

    def gr(s):
        c = s.constants
        q = lambda u: _inv_k(s.grid, u)
        return q(s.D) / (c.hbar * c.c_light * c.epsilon), q(s.B) / (c.hbar * c.c_light * c.mu)

    return Observable("N", photon_number, gr)


def helicity_observable(normalization: str = "duality") -> Observable:
    def ev(s):
        return helicity(s, normalization)

    def gr(s):
        c, g = s.constants, s.grid
        if normalization == "duality":
            op = lambda u: _spectral(u, g, KernelKind.INV_R, KernelKind.CURL) / (4 * np.pi)  # i k x / k^2
            pref = 1.0 / (c.hbar * c.c_light)
            return pref * op(s.D) / c.epsilon, pref * op(s.B) / c.mu
        pref = 2.0 / (4 * np.pi**2 * c.hbar * c.c_light)
        op = lambda u: _spectral(u, g, KernelKind.INV_R, KernelKind.CURL)
        return pref * op(s.D) / c.epsilon, pref * op(s.B) / c.mu

    return Observable(f"Lambda[{normalization}]", ev, gr)


def spin_J_observable(a: int) -> Observable:
    e = UNIT[a]

    def ev(s):
        return integrate(spin_density(s)[a], s.grid)

    def gr(s):
        A = vector_potential(s)
        return cross(A, np.broadcast_to(e, A.shape)), _T(cross(np.broadcast_to(e, s.D.shape), s.D), s.grid)

    return Observable(f"J_S{AXIS_NAMES[a]}", ev, gr)


def orbital_J_observable(a: int) -> Observable:
    def ev(s):
        return integrate(orbital_density(s)[a], s.grid)

    def gr(s):
        A = vector_potential(s)
        return _angular(A, s.grid, a), -_T(_angular(s.D, s.grid, a), s.grid)

    return Observable(f"J_O{AXIS_NAMES[a]}", ev, gr)


def total_J_observable(a: int) -> Observable:
    """J_a = integral D_a (r.B) - B_a (r.D)."""

    def ev(s):
        return float(total_J(s, warn=False)[a])

    def gr(s):
        x = s.grid.positions
        return UNIT[a] * dot(x, s.B) - x * s.B[a], x * s.D[a] - UNIT[a] * dot(x, s.D)

    return Observable(f"J{AXIS_NAMES[a]}", ev, gr)


# ---------------------------------------------------------------------------
# bracket


@dataclass(frozen=True)
class BracketResult:
    value: float
    scale: float

    @property
    def normalized(self) -> float:
        if self.scale == 0:
            return 0.0
        return self.value / self.scale


def gradient_norm(grad: Gradient, grid: GridSpec) -> float:
    return float(np.hypot(norm(grad[0], grid), norm(grad[1], grid)))


def poisson_bracket(F: Observable, G: Observable, state: FieldState) -> BracketResult:
    """{F, G} judged against the sizes of its two terms.

    scale = |curl dF/dD| |dG/dB| + |curl dG/dD| |dF/dB|, the Cauchy-Schwarz
    bound of the two inner products, so |normalized| <= 1. If both products
    vanish while the gradients do not, the global bound
    kappa |grad F| |grad G| (kappa = largest |k| on the grid) is used instead.
    """
    grid = state.grid
    gF = F.gradient(state)
    gG = G.gradient(state)
    cF = F.curl_gradient(state)
    cG = G.curl_gradient(state)
    value = inner(cF, gG[1], grid) - inner(cG, gF[1], grid)
    scale = norm(cF, grid) * norm(gG[1], grid) + norm(cG, grid) * norm(gF[1], grid)
    if scale == 0:
        scale = grid.kappa * gradient_norm(gF, grid) * gradient_norm(gG, grid)
    return BracketResult(value, scale)


def time_derivative(F: Observable, state: FieldState, dt: float | None = None) -> float:
    """Central difference of F along the exact flow."""
    if dt is None:
        dt = 1e-4 * min(state.grid.spacing) / state.constants.c_light
    plan = plan_for(state.grid, state.constants)
    return (F(propagate(state, dt, plan)) - F(propagate(state, -dt, plan))) / (2 * dt)


# ---------------------------------------------------------------------------
# Dirac-Schwinger relations in smeared form


DS_RELATIONS = ("energy_energy", "energy_momentum", "momentum_momentum")


def dirac_schwinger_sides(which: str, f: SmearFunction, g: SmearFunction, state: FieldState, k: int = 2, l: int = 0):
    """(bracket, right-hand side, scale) of a smeared energy/momentum density relation.

    energy_energy        {T00(f), T00(g)} = c int T0k (g d_k f - f d_k g)
    energy_momentum      {T00(f), T0k(g)} = c int (g T00 d_k f - f T^{ki} d_i g)
    momentum_momentum    {T0k(f), T0l(g)} = c int (g T0k d_l f - f T0l d_k g)
    """
    c = state.constants.c_light
    grid = state.grid
    if which == "energy_energy":
        br = poisson_bracket(smear("energy", f), smear("energy", g), state)
        T0 = momentum_density(state)
        rhs = c * integrate(dot(T0, g.values * f.grad - f.values * g.grad), grid)
    elif which == "energy_momentum":
        br = poisson_bracket(smear("energy", f), smear(f"momentum_{AXIS_NAMES[k]}", g), state)
        u = energy_density(state)
        Tki = maxwell_stress(state)[k]
        rhs = c * integrate(g.values * u * f.grad[k] - f.values * dot(Tki, g.grad), grid)
    elif which == "momentum_momentum":
        br = poisson_bracket(
            smear(f"momentum_{AXIS_NAMES[k]}", f), smear(f"momentum_{AXIS_NAMES[l]}", g), state
        )
        T0 = momentum_density(state)
        rhs = c * integrate(g.values * T0[k] * f.grad[l] - f.values * T0[l] * g.grad[k], grid)
    else:
        raise ValueError(f"unknown relation {which!r}; use one of {DS_RELATIONS}")
    return br.value, float(rhs), br.scale


def dirac_schwinger_residual(which: str, f: SmearFunction, g: SmearFunction, state: FieldState) -> float:
    """Normalized |bracket - rhs|, maximized over the momentum components involved."""
    if which == "energy_energy":
        combos = [(2, 0)]
    elif which == "energy_momentum":
        combos = [(k, 0) for k in range(3)]
    else:
        combos = [(k, l) for k in range(3) for l in range(3)]
    worst = 0.0
    for k, l in combos:
        lhs, rhs, scale = dirac_schwinger_sides(which, f, g, state, k, l)
        if scale > 0:
            worst = max(worst, abs(lhs - rhs) / scale)
    return worst


# ---------------------------------------------------------------------------
# commutator kernels


def _spectral_derivative_of_delta_1d(n: int, L: float) -> np.ndarray:
    """Closed form of the spectral derivative of the 1-D lattice delta (Nyquist dropped).

    d_j = (n/L)(pi/L)(-1)^j cot(pi j / n), d_0 = d_{n/2} = 0. Built from signed
    offsets so that d(-j) = -d(j) holds bit for bit.
    """
    j = np.fft.fftfreq(n, 1.0 / n).round().astype(int)
    out = np.zeros(n)
    ok = (j != 0) & (np.abs(j) != n // 2)
    out[ok] = (n / L) * (np.pi / L) * np.where(j[ok] % 2 == 0, 1.0, -1.0) / np.tan(np.pi * j[ok] / n)
    return out


def lattice_delta(grid: GridSpec) -> np.ndarray:
    """The lattice delta under the zero-mode policy: (1/V) sum over live modes of exp(ik.r)."""
    return to_real(grid.live.astype(complex), grid)


def commutator_kernel(kind: str, grid: GridSpec, smoothing: float = 0.0, padding: int = 1) -> np.ndarray:
    """c-number kernel K_ij(r - r') of shape (3, 3, nx, ny, nz).

    ``B_D``: eps_ijk d_k delta (multiplier i eps_ijk k_k).
    ``Aperp_D``: the transverse delta (multiplier delta_ij - k_i k_j / k^2),
    i.e. delta_ij delta + d_i d_j (1/4 pi r); the -i hbar factor is left out.
    ``smoothing`` > 0 replaces delta by a Gaussian of that width.
    ``padding`` > 1 builds the kernel on a supercell of that many boxes per
    axis (same spacing) and samples it back at this grid's displacements,
    which suppresses periodic images at separations comparable to the box.
    """
    if padding < 1:
        raise ValueError("padding must be a positive integer")
    if padding > 1:
        big = GridSpec(tuple(n * padding for n in grid.n), tuple(L * padding for L in grid.box))
        Kb = commutator_kernel(kind, big, smoothing)
        idx = []
        for n in grid.n:
            j = np.arange(n)
            j = np.where(j <= n // 2, j, j - n)  # signed displacement, +n/2 kept positive
            idx.append(j % (n * padding))
        return Kb[:, :, idx[0][:, None, None], idx[1][None, :, None], idx[2][None, None, :]]
    # the regularizing Gaussian uses the true wavenumber so that Nyquist-row
    # modes (whose effective wavevector has a zeroed component) are damped too
    damp = np.exp(-np.sum(grid.k**2, axis=0) * smoothing**2 / 2) if smoothing > 0 else None
    K = np.zeros((3, 3) + grid.n)
    if kind == "B_D":
        if damp is None:
            dk = []
            for a in range(3):
                parts = []
                for b in range(3):
                    if a == b:
                        parts.append(_spectral_derivative_of_delta_1d(grid.n[b], grid.box[b]))
                    else:
                        d1 = np.zeros(grid.n[b])
                        d1[0] = grid.n[b] / grid.box[b]
                        parts.append(d1)
                dk.append(np.einsum("i,j,k->ijk", *parts))
        else:
            dk = [to_real(1j * grid.k_eff[a] * damp, grid) for a in range(3)]
        for i in range(3):
            for j in range(i + 1, 3):
                v = sum(LEVI_CIVITA[i, j, k] * dk[k] for k in range(3))
                K[i, j] = v
                K[j, i] = -v
        return K
    if kind == "Aperp_D":
        kh = grid.khat
        w = grid.live.astype(float) if damp is None else grid.live * damp
        for i in range(3):
            for j in range(i, 3):
                m = ((i == j) - kh[i] * kh[j]) * w
                K[i, j] = to_real(m.astype(complex), grid)
                K[j, i] = K[i, j]
        return K
    raise ValueError(f"unknown kernel kind {kind!r}; use B_D or Aperp_D")


def commutator_kernel_spectral(kind: str, grid: GridSpec) -> np.ndarray:
    """Same kernels assembled directly from the FFT of the multiplier (cross-check route)."""
    K = np.zeros((3, 3) + grid.n)
    if kind == "B_D":
        for i in range(3):
            for j in range(3):
                m = sum(1j * LEVI_CIVITA[i, j, k] * grid.k_eff[k] for k in range(3))
                K[i, j] = to_real(np.asarray(m, complex) * np.ones(grid.n), grid)
        return K
    return commutator_kernel(kind, grid)


def tail_exponent(
    K: np.ndarray,
    grid: GridSpec,
    component=(0, 1),
    direction=(1, 1, 0),
    r_min: float | None = None,
) -> float:
    """Log-log slope of |K_ij| along a lattice direction over one octave [r_min, 2 r_min]."""
    d = np.asarray(direction, int)
    if r_min is None:
        r_min = min(grid.box) / 4
    step = np.linalg.norm(d * np.array(grid.spacing))
    rs, vs = [], []
    s = 1
    while True:
        r = s * step
        if r > 2 * r_min * (1 + 1e-12):
            break
        if r >= r_min * (1 - 1e-12):
            idx = tuple(int(v) % n for v, n in zip(s * d, grid.n))
            rs.append(r)
            vs.append(abs(K[component][idx]))
        s += 1
    rs, vs = np.array(rs), np.array(vs)
    if len(rs) < 3 or np.any(vs == 0):
        raise ValueError("not enough nonzero samples in the fitting window")
    return float(np.polyfit(np.log(rs), np.log(vs), 1)[0])


# ---------------------------------------------------------------------------
# locality test


@dataclass(frozen=True)
class LocalityReport:
    pair: tuple[str, str]
    separation: float
    ensemble_size: int
    max_abs: float
    median_abs: float
    values: tuple[float, ...]

    @property
    def verdict(self) -> str:
        if self.max_abs <= LOCAL_THRESHOLD:
            return "LOCAL"
        if self.median_abs >= NONLOCAL_THRESHOLD:
            return "NONLOCAL"
        return "INCONCLUSIVE"

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "separation": self.separation,
            "ensemble_size": self.ensemble_size,
            "max_abs_normalized": self.max_abs,
            "median_abs_normalized": self.median_abs,
            "verdict": self.verdict,
            "values": list(self.values),
        }


def ensemble_states(
    grid: GridSpec,
    seeds: Iterable[int],
    constants: PhysicalConstants | None = None,
    exponent: float = 2.0,
    cutoff: float = 4.0,
) -> list[FieldState]:
    return [make_state(RandomTransverse(int(s), exponent, cutoff), grid, constants) for s in seeds]


def locality_test(
    density_a: str,
    density_b: str,
    f: SmearFunction,
    g: SmearFunction,
    seeds: Sequence[int] | None = None,
    states: Sequence[FieldState] | None = None,
    exponent: float = 2.0,
    cutoff: float = 4.0,
) -> LocalityReport:
    """Normalized brackets of two disjointly smeared densities over an ensemble.

    The default ensemble is red-spectrum random transverse fields
    (|m|^-2 envelope, |m| <= 4), where the long-wavelength content that the
    nonlocal kernels weight most is well represented.
    """
    sep = separation(f, g)
    if sep <= 0:
        raise ValueError("smear supports overlap; the locality criterion needs disjoint regions")
    if states is None:
        if not seeds:
            raise ValueError("empty ensemble")
        states = ensemble_states(f.grid, seeds, exponent=exponent, cutoff=cutoff)
    if len(states) == 0:
        raise ValueError("empty ensemble")
    F = smear(density_a, f)
    G = smear(density_b, g)
    vals = [poisson_bracket(F, G, s).normalized for s in states]
    mags = np.sort(np.abs(vals))
    return LocalityReport(
        (density_a, density_b), sep, len(vals), float(mags[-1]), float(np.median(mags)), tuple(float(v) for v in vals)
    )


# ---------------------------------------------------------------------------
# duality


def duality_rotate(state: FieldState, theta: float) -> FieldState:
    """Rotate (D/sqrt(eps), B/sqrt(mu)) by the angle theta/hbar."""
    c = state.constants
    phi = theta / c.hbar
    e = state.D / np.sqrt(c.epsilon)
    b = state.B / np.sqrt(c.mu)
    e2 = np.cos(phi) * e + np.sin(phi) * b
    b2 = np.cos(phi) * b - np.sin(phi) * e
    return state.with_fields(e2 * np.sqrt(c.epsilon), b2 * np.sqrt(c.mu))


def hamiltonian_step(state: FieldState, G: Observable, theta: float) -> FieldState:
    """One explicit Euler step of the flow generated by G: dD = curl(dG/dB), dB = -curl(dG/dD)."""
    gD, gB = G.gradient(state)
    grid = state.grid
    return state.with_fields(state.D + theta * curl(gB, grid), state.B - theta * curl(gD, grid))


@dataclass(frozen=True)
class DualityCheck:
    energy_bracket: float  # max normalized |{T00(f), Lambda}| over the probe smears
    total_energy_bracket: float
    mismatch: float  # |Euler step - rotation| / |state| at theta
    mismatch_half: float  # same at theta/2
    theta: float

    @property
    def ratio(self) -> float:
        return self.mismatch / self.mismatch_half if self.mismatch_half > 0 else float("inf")


def duality_generator_check(
    state: FieldState, theta: float = 1e-3, smears: Sequence[SmearFunction] | None = None
) -> DualityCheck:
    Lam = helicity_observable("duality")
    if smears is None:
        L = np.array(state.grid.box)
        # wide, gentle smears keep the product-rule curl free of aliasing
        centers = [(0.0, 0.0, 0.0), L * np.array([0.08, -0.05, 0.03])]
        smears = [bump(state.grid, c, 0.45 * L.min(), id=f"p{i}", sharpness=8.0) for i, c in enumerate(centers)]
    eb = max(abs(poisson_bracket(smear("energy", f), Lam, state).normalized) for f in smears)
    teb = abs(poisson_bracket(energy_observable(), Lam, state).normalized)

    def mismatch(th):
        if th == 0:
            return 0.0
        a = hamiltonian_step(state, Lam, th)
        b = duality_rotate(state, th)
        diff = a.with_fields(a.D - b.D, a.B - b.B)
        return diff.norm() / state.norm()

    return DualityCheck(eb, teb, mismatch(theta), mismatch(theta / 2), theta)
