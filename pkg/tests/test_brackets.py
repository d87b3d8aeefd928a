import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emlocal import brackets as br
from emlocal.fields import LocalizedRandom, PhysicalConstants, RandomTransverse, make_state, random_transverse_field
from emlocal.spectral import GridSpec, inner

G16 = GridSpec.cube(16)
MEDIUM = PhysicalConstants(epsilon=1.5, mu=2.0, hbar=0.8)
seeds = st.integers(0, 2**31)


def directional_oracle(F, state, seed):
    """Central difference of F along a random transverse direction.

    F is quadratic, so the central difference is exact up to rounding for any
    step; the step is scaled to the state to keep the two evaluations balanced.
    """
    g = state.grid
    v = state.with_fields(random_transverse_field(g, seed, stream=0), random_transverse_field(g, seed, stream=1))
    eps = state.norm() / v.norm()
    plus = state.with_fields(state.D + eps * v.D, state.B + eps * v.B)
    minus = state.with_fields(state.D - eps * v.D, state.B - eps * v.B)
    fd = (F(plus) - F(minus)) / (2 * eps)
    gD, gB = F.gradient(state)
    analytic = inner(gD, v.D, g) + inner(gB, v.B, g)
    return fd, analytic


def observables_under_test(grid):
    f = br.bump(grid, (0.1, 0, 0), 0.3, sharpness=2)
    obs = [br.energy_observable(), br.photon_number_observable()]
    obs += [br.helicity_observable("duality"), br.helicity_observable("literal")]
    for a in range(3):
        obs += [br.spin_J_observable(a), br.orbital_J_observable(a), br.total_J_observable(a)]
    obs += [br.smear(d, f) for d in ("energy", "photon")]
    for base in ("momentum", "spin", "orbital"):
        obs += [br.smear(f"{base}_{c}", f) for c in "xyz"]
    return obs


LOCALIZED = LocalizedRandom(seed=4, width=0.1, spread=0.02, max_carrier=1)


# ---------------------------------------------------------------------------
# smears


def test_bump_is_compactly_supported_with_analytic_gradient():
    f = br.bump(GridSpec.cube(32), (0.1, -0.2, 0.0), 0.2, sharpness=1.5)
    d = f.grid.positions - np.reshape((0.1, -0.2, 0.0), (3, 1, 1, 1))
    r = np.sqrt(np.sum(d**2, axis=0))
    assert np.all(f.values[r >= 0.2] == 0)
    assert f.values.max() <= 1.0
    # spot-check the gradient against a finite difference of the closed form
    h = 1e-6
    p = np.array([0.13, -0.17, 0.02])
    bump_at = lambda q: np.exp(-1.5 * (q @ q / 0.04) / (1 - q @ q / 0.04))  # noqa: E731
    q = p - np.array([0.1, -0.2, 0.0])
    fd = np.array([(bump_at(q + h * e) - bump_at(q - h * e)) / (2 * h) for e in np.eye(3)])
    rho2 = q @ q / 0.04
    analytic = -1.5 / (1 - rho2) ** 2 * bump_at(q) * 2 * q / 0.04
    np.testing.assert_allclose(analytic, fd, rtol=1e-6)


def test_smear_over_half_the_box_is_rejected():
    with pytest.raises(ValueError):
        br.bump(G16, (0, 0, 0), 0.7)


def test_separation_of_disjoint_bumps():
    g = GridSpec.cube(32)
    f = br.bump(g, (-0.25, 0, 0), 0.15, "f")
    h = br.bump(g, (0.25, 0, 0), 0.15, "g")
    # supports end one cell short of the nominal radius on each side
    assert br.separation(f, h) == pytest.approx(0.2 + 2 * g.spacing[0], abs=g.spacing[0])
    assert br.separation(f, f) == 0.0


def test_separation_wraps_around_the_box():
    g = GridSpec.cube(32)
    f = br.bump(g, (-0.4, 0, 0), 0.05)
    h = br.bump(g, (0.4, 0, 0), 0.05)
    assert br.separation(f, h) < 0.2


def test_unknown_densities_are_rejected():
    f = br.bump(G16, (0, 0, 0), 0.3)
    with pytest.raises(ValueError):
        br.smear("charge", f)
    with pytest.raises(ValueError):
        br.smear("momentum", f)
    with pytest.raises(ValueError):
        br.smear("spin_w", f)


# ---------------------------------------------------------------------------
# gradients


@pytest.mark.parametrize("k", range(23))
def test_analytic_gradients_match_finite_differences(k):
    s = make_state(LOCALIZED, G16, MEDIUM)
    F = observables_under_test(G16)[k]
    fd, analytic = directional_oracle(F, s, seed=k)
    assert abs(fd - analytic) <= 1e-8 * max(abs(fd), abs(analytic), 1e-300), F.id


def test_curl_of_smeared_gradient_matches_spectral_curl_for_smooth_smears():
    s = make_state(RandomTransverse(5, exponent=2, cutoff=3), GridSpec.cube(32))
    f = br.bump(s.grid, (0, 0, 0), 0.45, sharpness=8)
    for d in ("energy", "momentum_y", "photon", "spin_z", "orbital_x"):
        F = br.smear(d, f)
        via_product = F.curl_gradient(s)
        spectral = br.curl(F.gradient(s)[0], s.grid)
        # the two differ only by aliasing of the smear-field product
        assert np.linalg.norm(via_product - spectral) <= 1e-4 * np.linalg.norm(spectral), d


# ---------------------------------------------------------------------------
# bracket algebra


@given(seeds)
def test_bracket_is_antisymmetric(seed):
    s = make_state(RandomTransverse(seed), G16, MEDIUM)
    f = br.bump(G16, (0.1, 0, 0), 0.3)
    g = br.bump(G16, (-0.1, 0.1, 0), 0.25)
    F, G = br.smear("energy", f), br.smear("photon", g)
    assert br.poisson_bracket(F, G, s).value == -br.poisson_bracket(G, F, s).value


@given(seeds, st.floats(-3, 3), st.floats(-3, 3))
def test_bracket_is_bilinear(seed, a, b):
    s = make_state(RandomTransverse(seed), G16, MEDIUM)
    f = br.bump(G16, (0.1, 0, 0), 0.3)
    F1, F2 = br.smear("energy", f), br.smear("momentum_x", f)
    G = br.smear("spin_z", br.bump(G16, (-0.1, 0, 0), 0.3))
    lhs = br.poisson_bracket(a * F1 + b * F2, G, s).value
    rhs = a * br.poisson_bracket(F1, G, s).value + b * br.poisson_bracket(F2, G, s).value
    scale = br.poisson_bracket(F1, G, s).scale + br.poisson_bracket(F2, G, s).scale
    assert abs(lhs - rhs) <= 1e-12 * (abs(a) + abs(b) + 1) * scale


def test_normalized_bracket_is_bounded_by_one(random_state):
    f = br.bump(G16, (0, 0, 0), 0.3)
    for d in ("energy", "photon", "spin_x"):
        for e in ("momentum_z", "orbital_y"):
            assert abs(br.poisson_bracket(br.smear(d, f), br.smear(e, f), random_state).normalized) <= 1


@pytest.mark.parametrize("name", ["energy", "momentum_x", "photon", "spin_y", "orbital_z"])
def test_bracket_with_energy_generates_time_evolution(name):
    # a wide, gentle smear on a smooth state keeps the product-rule curl alias free
    g = GridSpec.cube(32)
    s = make_state(RandomTransverse(7, exponent=2, cutoff=3), g, MEDIUM)
    F = br.smear(name, br.bump(g, (0.05, 0, 0), 0.45, sharpness=8))
    bracket = br.poisson_bracket(F, br.energy_observable(), s)
    dt = 1e-3 * g.spacing[0] / MEDIUM.c_light
    assert abs(bracket.value - br.time_derivative(F, s, dt)) <= 1e-8 * bracket.scale


@pytest.mark.parametrize("Q", [br.energy_observable, br.photon_number_observable, br.helicity_observable])
def test_conserved_totals_commute_with_the_energy(Q, random_state):
    assert abs(br.poisson_bracket(Q(), br.energy_observable(), random_state).normalized) <= 1e-12


def test_local_densities_on_disjoint_regions_commute_exactly(random_state):
    f = br.bump(G16, (-0.25, 0, 0), 0.2, "f")
    g = br.bump(G16, (0.25, 0, 0), 0.2, "g")
    for a in ("energy", "momentum_x", "momentum_y"):
        for b in ("energy", "momentum_z"):
            r = br.poisson_bracket(br.smear(a, f), br.smear(b, g), random_state)
            assert abs(r.normalized) <= 1e-12


def test_locality_test_rejects_overlapping_smears():
    f = br.bump(G16, (0, 0, 0), 0.3)
    with pytest.raises(ValueError):
        br.locality_test("energy", "energy", f, f, seeds=[1])


def test_locality_verdicts():
    g = GridSpec.cube(16)
    f = br.bump(g, (-0.25, 0, 0), 0.24, "f", sharpness=0.5)
    h = br.bump(g, (0.25, 0, 0), 0.24, "g", sharpness=0.5)
    local = br.locality_test("energy", "momentum_x", f, h, seeds=range(4))
    nonlocal_ = br.locality_test("photon", "photon", f, h, seeds=range(4))
    assert local.verdict == "LOCAL"
    assert nonlocal_.verdict == "NONLOCAL"
    assert local.to_dict()["ensemble_size"] == 4


@pytest.mark.parametrize("which", br.DS_RELATIONS)
def test_energy_momentum_algebra_holds_for_overlapping_smears(which):
    s = make_state(RandomTransverse(7, exponent=2, cutoff=3), GridSpec.cube(32))
    f = br.bump(s.grid, (0, 0, 0), 0.45, "f", sharpness=8)
    g = br.bump(s.grid, (0.08, -0.05, 0.03), 0.45, "g", sharpness=8)
    assert br.dirac_schwinger_residual(which, f, g, s) <= 1e-8


def test_unknown_relation_is_rejected(random_state):
    f = br.bump(G16, (0, 0, 0), 0.3)
    with pytest.raises(ValueError):
        br.dirac_schwinger_sides("momentum_energy", f, f, random_state)


# ---------------------------------------------------------------------------
# commutator kernels


def test_b_d_kernel_closed_form_matches_fft_route():
    g = GridSpec((16, 12, 8), (1.0, 1.5, 0.7))
    np.testing.assert_allclose(br.commutator_kernel("B_D", g), br.commutator_kernel_spectral("B_D", g), atol=1e-9)


@pytest.mark.parametrize("kind", ["B_D", "Aperp_D"])
def test_kernels_have_the_right_index_symmetry(kind):
    K = br.commutator_kernel(kind, G16)
    sign = -1 if kind == "B_D" else 1
    assert np.array_equal(K, sign * np.swapaxes(K, 0, 1))


def test_transverse_delta_has_trace_of_two_deltas():
    g = GridSpec((16, 16, 12), (1.0, 1.0, 0.8))
    K = br.commutator_kernel("Aperp_D", g)
    tr = np.trace(K)
    delta = br.lattice_delta(g)
    assert np.max(np.abs(tr - 2 * delta)) <= 1e-12 * np.max(np.abs(delta))


def test_transverse_delta_tail_falls_as_inverse_cube():
    g = GridSpec.cube(32)
    K = br.commutator_kernel("Aperp_D", g, smoothing=1.5 * g.spacing[0], padding=2)
    assert br.tail_exponent(K, g) == pytest.approx(-3.0, abs=0.3)


def test_kernel_arguments_are_validated():
    with pytest.raises(ValueError):
        br.commutator_kernel("E_B", G16)
    with pytest.raises(ValueError):
        br.commutator_kernel("B_D", G16, padding=0)


# ---------------------------------------------------------------------------
# duality


def test_rotation_by_a_full_turn_is_identity(random_state):
    out = br.duality_rotate(random_state, 2 * np.pi * random_state.constants.hbar)
    np.testing.assert_allclose(out.D, random_state.D, atol=1e-12)


def test_helicity_generates_duality_rotations():
    s = make_state(RandomTransverse(3, exponent=2, cutoff=3), GridSpec.cube(32))
    chk = br.duality_generator_check(s)
    assert chk.energy_bracket <= 1e-8
    assert chk.total_energy_bracket <= 1e-12
    assert chk.ratio == pytest.approx(4.0, abs=0.2)
