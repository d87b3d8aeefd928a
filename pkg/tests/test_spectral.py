import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emlocal import spectral as sp
from emlocal.spectral import GridSpec, KernelKind, KernelSpec

from conftest import rel

even_sizes = st.sampled_from([8, 10, 12, 16])
boxes = st.floats(0.5, 3.0)


@st.composite
def grids(draw):
    n = tuple(draw(even_sizes) for _ in range(3))
    box = tuple(draw(boxes) for _ in range(3))
    return GridSpec(n, box)


def random_vector(grid, seed, mean_free=True):
    f = np.random.default_rng(seed).standard_normal((3,) + grid.n)
    return sp.remove_mean(f) if mean_free else f


def dft_oracle(f, grid):
    """Forward transform by explicit summation over the grid."""
    idx = [np.arange(n) for n in grid.n]
    out = np.zeros(grid.n, complex)
    x = [i * h for i, h in zip(idx, grid.spacing)]
    k = [2 * np.pi * np.fft.fftfreq(n, d=h) for n, h in zip(grid.n, grid.spacing)]
    ex = [np.exp(-1j * np.outer(kk, xx)) for kk, xx in zip(k, x)]
    out = np.einsum("ai,bj,ck,ijk->abc", ex[0], ex[1], ex[2], f)
    return out * grid.cell_volume


# ---------------------------------------------------------------------------
# grid construction


@pytest.mark.parametrize("n", [7, 6, 0, -8])
def test_grid_rejects_odd_or_small_sizes(n):
    with pytest.raises(ValueError):
        GridSpec.cube(n)


def test_grid_rejects_bad_box():
    with pytest.raises(ValueError):
        GridSpec((8, 8, 8), (1.0, -1.0, 1.0))


def test_nyquist_rows_have_zero_effective_wavevector():
    g = GridSpec((8, 10, 12), (1.0, 2.0, 1.5))
    for a in range(3):
        on_row = np.broadcast_to(np.abs(g.mode_index[a]) == g.n[a] // 2, g.n)
        assert np.all(g.k_eff[a][on_row] == 0)
        assert np.all(g.k_eff[a][~on_row] == g.k[a][~on_row])
    assert not g.live[0, 0, 0]


# ---------------------------------------------------------------------------
# transforms


def test_cosine_mode_coefficients_match_direct_summation():
    # DERIVED: explicit-sum oracle at 8^3; two coefficients of magnitude V/2
    g = GridSpec.cube(8, 1.0)
    x = np.stack(np.meshgrid(*[np.arange(8) / 8] * 3, indexing="ij"))
    f = np.cos(2 * np.pi * 2 * x[2])
    d = sp.to_spectral(f, g)
    np.testing.assert_allclose(d, dft_oracle(f, g), atol=1e-13)
    mags = np.sort(np.abs(d).ravel())[::-1]
    np.testing.assert_allclose(mags[:2], [0.5, 0.5], rtol=1e-14)
    assert mags[2] < 1e-14
    assert abs(d[0, 0, 2]) == pytest.approx(0.5) and abs(d[0, 0, -2]) == pytest.approx(0.5)


@given(grids(), st.integers(0, 2**31))
def test_roundtrip_is_identity(grid, seed):
    f = random_vector(grid, seed, mean_free=False)
    back = sp.to_real(sp.to_spectral(f, grid), grid)
    assert rel(back, f) <= 1e-13


@given(grids(), st.integers(0, 2**31))
def test_parseval(grid, seed):
    f = random_vector(grid, seed, mean_free=False)
    d = sp.to_spectral(f, grid)
    lhs = np.sum(f**2) * grid.cell_volume
    rhs = np.sum(np.abs(d) ** 2) / grid.volume
    assert abs(lhs - rhs) <= 1e-12 * lhs


def test_to_real_rejects_non_hermitian_input():
    g = GridSpec.cube(8)
    s = np.zeros(g.n, complex)
    s[0, 0, 1] = 1.0
    with pytest.raises(ValueError):
        sp.to_real(s, g)


def test_integrate_and_inner_products():
    g = GridSpec((8, 8, 10), (1.0, 2.0, 0.5))
    ones = np.ones(g.n)
    assert sp.integrate(ones, g) == pytest.approx(g.volume)
    f = random_vector(g, 3)
    assert sp.inner(f, f, g) == pytest.approx(sp.norm(f, g) ** 2)


# ---------------------------------------------------------------------------
# differential operators and the projector


@given(grids(), st.integers(0, 2**31))
def test_transverse_projector_is_idempotent_and_self_adjoint(grid, seed):
    f = random_vector(grid, seed)
    h = random_vector(grid, seed + 1)
    P = sp.transverse_project
    pf = P(f, grid)
    assert rel(P(pf, grid), pf) <= 1e-12
    lhs, rhs = sp.inner(pf, h, grid), sp.inner(f, P(h, grid), grid)
    assert abs(lhs - rhs) <= 1e-12 * sp.norm(f, grid) * sp.norm(h, grid)
    assert sp.relative_divergence(pf, grid) <= 1e-12


@given(grids(), st.integers(0, 2**31))
def test_projector_kills_gradients_and_curl_of_gradient_vanishes(grid, seed):
    phi = sp.remove_mean(np.random.default_rng(seed).standard_normal(grid.n))
    grad = sp.gradient(phi, grid)
    assert sp.norm(sp.transverse_project(grad, grid), grid) <= 1e-12 * sp.norm(grad, grid)
    assert sp.norm(sp.curl(grad, grid), grid) <= 1e-12 * grid.kappa * sp.norm(grad, grid)


@given(grids(), st.integers(0, 2**31))
def test_divergence_of_curl_vanishes(grid, seed):
    f = random_vector(grid, seed)
    c = sp.curl(f, grid)
    assert sp.norm(sp.divergence(c, grid), grid) <= 1e-12 * grid.kappa**2 * sp.norm(f, grid)


def test_derivative_of_a_mode():
    g = GridSpec.cube(16, 2.0)
    x = g.positions
    f = np.sin(3 * np.pi * x[1])  # 3 half-waves per unit: mode number 3 on a box of 2
    np.testing.assert_allclose(sp.derivative(f, g, 1), 3 * np.pi * np.cos(3 * np.pi * x[1]), atol=1e-11)
    assert np.max(np.abs(sp.derivative(f, g, 0))) < 1e-12


def test_derivative_of_nyquist_row_is_zero():
    g = GridSpec.cube(8)
    f = (-1.0) ** np.arange(8)[:, None, None] * np.ones(g.n)
    assert np.all(sp.derivative(f, g, 0) == 0)


# ---------------------------------------------------------------------------
# multiplier kernels


def test_scalar_multipliers_on_a_single_mode():
    g = GridSpec.cube(16, 1.0)
    x = g.positions
    k = 2 * np.pi * 2
    f = np.cos(k * x[0])
    np.testing.assert_allclose(sp.filter_real(f, g, "inv_r"), 4 * np.pi / k**2 * f, atol=1e-13)
    np.testing.assert_allclose(sp.filter_real(f, g, "inv_r2"), 2 * np.pi**2 / k * f, atol=1e-13)
    spec = KernelSpec("inv_hbar_ck", hbar=2.0, c_light=3.0)
    np.testing.assert_allclose(sp.filter_real(f, g, spec), f / (6 * k), atol=1e-13)


def test_all_kernels_annihilate_the_zero_mode():
    g = GridSpec.cube(8)
    const = np.ones((3,) + g.n)
    for kind in ("inv_r", "inv_r2", "inv_hbar_ck", "transverse_projector", "curl"):
        assert np.all(sp.filter_real(const, g, kind) == 0)
    assert np.all(sp.filter_real(const, g, KernelSpec("derivative", axis=1)) == 0)


def test_derivative_kernel_needs_an_axis():
    with pytest.raises(ValueError):
        KernelSpec("derivative")


@given(st.integers(0, 2**31), st.integers(0, 15), st.integers(0, 15), st.integers(0, 15))
def test_kernels_commute_with_lattice_translations(seed, a, b, c):
    g = GridSpec.cube(16)
    f = sp.remove_mean(np.random.default_rng(seed).standard_normal(g.n))
    shift = lambda u: np.roll(u, (a, b, c), axis=sp.AXES)  # noqa: E731
    for kind in (KernelKind.INV_R, KernelKind.INV_R2):
        assert rel(sp.filter_real(shift(f), g, kind), shift(sp.filter_real(f, g, kind))) <= 1e-13


# ---------------------------------------------------------------------------
# direct convolution


def test_lattice_zeta_reproduces_known_cubic_values():
    # sum' |n|^-1 and sum' |n|^-2 over Z^3, analytically continued
    assert sp.lattice_zeta(0.5, (1, 1, 1)) == pytest.approx(-2.8372974794806, rel=1e-12)
    assert sp.lattice_zeta(1.0, (1, 1, 1)) == pytest.approx(-8.91363291758515, rel=1e-12)


@given(st.tuples(boxes, boxes, boxes), st.floats(0.2, 5.0), st.sampled_from([0.5, 1.0]))
def test_lattice_zeta_scales_homogeneously(spacing, lam, s):
    a = sp.lattice_zeta(s, spacing)
    b = sp.lattice_zeta(s, tuple(lam * h for h in spacing))
    assert b == pytest.approx(a * lam ** (-2 * s), rel=1e-10)


@pytest.mark.parametrize("n,box", [((32, 32, 16), (1, 1, 1)), ((32, 16, 32), (1, 1.5, 1)), ((24,) * 3, (1,) * 3)])
def test_corrected_self_term_integrates_singular_gaussian(n, box):
    # closed form: integral exp(-r^2 / 2 s^2) / r d^3r = 4 pi s^2
    g = GridSpec(n, box)
    s = 0.1
    r2 = np.sum(g.min_image**2, axis=0)
    gauss = np.exp(-r2 / (2 * s * s))
    corrected = np.sum(sp.real_space_kernel(g, "inv_r") * gauss) * g.cell_volume
    dropped = np.sum(sp.real_space_kernel(g, "inv_r", self_term="zero") * gauss) * g.cell_volume
    exact = 4 * np.pi * s * s
    assert abs(corrected / exact - 1) < 2e-3
    assert abs(corrected / exact - 1) < 0.2 * abs(dropped / exact - 1)


def test_direct_sum_matches_plain_numpy_loop():
    g = GridSpec.cube(8)
    f = sp.remove_mean(np.random.default_rng(0).standard_normal(g.n))
    K = sp.real_space_kernel(g, "inv_r2")
    np.testing.assert_allclose(sp._direct_sum(K, f), sp._direct_sum_numpy(K, f), rtol=1e-12)


def test_direct_sum_commutes_with_translations():
    g = GridSpec.cube(8)
    f = sp.remove_mean(np.random.default_rng(1).standard_normal(g.n))
    out = sp.convolve_direct(f, g, "inv_r")
    shifted = sp.convolve_direct(np.roll(f, (1, 2, 3), axis=sp.AXES), g, "inv_r")
    np.testing.assert_allclose(shifted, np.roll(out, (1, 2, 3), axis=sp.AXES), atol=1e-12)


def test_direct_convolution_rejects_nonzero_mean():
    g = GridSpec.cube(8)
    with pytest.raises(ValueError, match="zero-mean"):
        sp.convolve_direct(np.ones(g.n), g, "inv_r")


def test_direct_convolution_rejects_unknown_self_term():
    with pytest.raises(ValueError):
        sp.real_space_kernel(GridSpec.cube(8), "inv_r", self_term="half")
