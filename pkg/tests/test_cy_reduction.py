import numpy as np
import pytest

from ktcy import (
    DegenerateMetric,
    DensityData,
    Grid,
    InvariantOneForm,
    NotPositiveDefinite,
    Potential,
    ReducedMetric,
    TorusField,
    assemble_omega_tilde,
    cohomology_coeffs,
    derivative,
    diagnostics,
    ext_d,
    is_admissible,
    j_one_form,
    j_two_form,
    key_identity_gap,
    la_inequality,
    laplace_flat,
    laplace_tilde,
    lemma22_margin,
    metric_matrix,
    omega,
    reconstruct_one_form,
    reduced_metric,
    residual,
    trace_u,
    wedge_top,
)
from ktcy.torus_grid import deriv_values, integrate


def small_potential(n, seed=0, hessian_sup=0.2):
    rng = np.random.default_rng(seed)
    g = Grid(n)
    x, y = g.coords()
    vals = np.zeros((n, n))
    for k, l in ((1, 0), (0, 1), (1, 1), (2, 1), (1, 2)):
        ph = 2 * np.pi * (k * x + l * y)
        vals += rng.normal() * np.cos(ph) + rng.normal() * np.sin(ph)
    worst = max(
        np.abs(deriv_values(vals, w)).max() for w in ("xx", "yy", "xy")
    )
    return Potential.from_field(TorusField(g, vals * (hessian_sup / worst)))


def oneD_oracle(n, a=0.5):
    """Closed-form solution of (1 + phi_xx) = e^(F+c) for F = a cos(2 pi x)."""
    g = Grid(n)
    x, _ = g.coords()
    F = TorusField(g, a * np.cos(2 * np.pi * x))
    d = DensityData.normalized(F)
    rhs = d.target() - 1.0
    hat = np.fft.rfft2(rhs)
    kx = np.fft.fftfreq(n, 1 / n)[:, None]
    mult = (2j * np.pi * kx) ** 2 * np.ones((1, hat.shape[1]))
    safe = np.where(np.abs(mult) == 0, 1.0, mult)
    hat = np.where(np.abs(mult) == 0, 0.0, hat / safe)
    phi = np.fft.irfft2(hat, s=(n, n))
    return Potential.from_field(TorusField(g, phi)), d


def test_potential_validation():
    g = Grid(8)
    with pytest.raises(ValueError):
        Potential(TorusField(g, np.full((8, 8), 0.1)))
    p = Potential.from_field(TorusField(g, np.full((8, 8), 0.1)))
    np.testing.assert_allclose(p.phi.values, 0.0, atol=1e-16)
    assert integrate(Potential.zero(g).phi) == 0.0


def test_reduced_metric_consistency_enforced():
    g = Grid(8)
    one = TorusField(g, np.ones((8, 8)))
    zero = TorusField(g, np.zeros((8, 8)))
    ReducedMetric(one, one, zero, one)  # nu = 1*1 - 0
    with pytest.raises(ValueError):
        ReducedMetric(one, one, zero, TorusField(g, np.full((8, 8), 1.5)))


def test_density_data_normalization():
    g = Grid(64)
    x, _ = g.coords()
    F = TorusField(g, np.cos(2 * np.pi * x))
    d = DensityData.normalized(F)
    assert abs(np.mean(np.exp(F.values + d.c)) - 1.0) < 1e-15
    np.testing.assert_allclose(d.c, -np.log(np.i0(1.0)), atol=1e-14)
    with pytest.raises(ValueError):
        DensityData(F, 0.0)  # mean(e^F) = I0(1) != 1


def test_reduced_metric_explicit():
    n = 32
    g = Grid(n)
    x, _ = g.coords()
    a = 0.01
    p = Potential.from_field(TorusField(g, a * np.cos(2 * np.pi * x)))
    m = reduced_metric(p)
    np.testing.assert_allclose(
        m.A.values, 1.0 - a * 4 * np.pi**2 * np.cos(2 * np.pi * x), atol=1e-12
    )
    np.testing.assert_allclose(m.B.values, 1.0, atol=1e-13)
    np.testing.assert_allclose(m.D.values, 0.0, atol=1e-13)
    np.testing.assert_allclose(m.nu.values, m.A.values, atol=1e-13)


def test_admissibility():
    p = small_potential(16)
    m = reduced_metric(p)
    assert is_admissible(m, 0.0)
    assert is_admissible(m, 0.5)
    assert not is_admissible(m, 2.0)  # A cannot exceed delta = 2 everywhere
    with pytest.raises(ValueError):
        is_admissible(m, -0.1)


def test_nu_and_u_against_wedge_products():
    p = small_potential(32, seed=4)
    m = reduced_metric(p)
    wt = assemble_omega_tilde(p)
    # omega~ ^ omega~ = 2 nu vol, Omega ^ omega~ = u vol
    np.testing.assert_allclose(
        wedge_top(wt, wt).values, 2.0 * m.nu.values, atol=1e-12
    )
    np.testing.assert_allclose(
        wedge_top(omega(p.grid), wt).values, trace_u(p).values, atol=1e-12
    )
    # the assembled form is J-invariant
    for a, b in zip(j_two_form(wt).coeffs(), wt.coeffs()):
        np.testing.assert_array_equal(a.values, b.values)


def test_mass_normalizations():
    p = small_potential(32, seed=5)
    m = reduced_metric(p)
    assert abs(integrate(m.nu) - 1.0) < 1e-13
    assert abs(integrate(trace_u(p)) - 2.0) < 1e-14


def test_residual_vanishes_on_manufactured_solution():
    p = small_potential(32, seed=6)
    m = reduced_metric(p)
    d = DensityData.normalized(TorusField(p.grid, np.log(m.nu.values)))
    r = residual(p, d)
    assert np.abs(r.values).max() < 1e-13
    assert abs(integrate(r)) < 1e-15


def test_laplace_flat_single_mode():
    g = Grid(32)
    x, y = g.coords()
    psi = TorusField(g, np.cos(2 * np.pi * (x + 2 * y)))
    np.testing.assert_allclose(
        laplace_flat(psi).values, -20 * np.pi**2 * psi.values, atol=1e-9
    )


def test_laplace_tilde_reduces_to_flat():
    g = Grid(32)
    p = Potential.zero(g)
    m = reduced_metric(p)
    rng = np.random.default_rng(8)
    psi = TorusField(g, rng.standard_normal((32, 32)))
    np.testing.assert_allclose(
        laplace_tilde(psi, m).values, laplace_flat(psi).values, atol=1e-10
    )


def test_laplace_tilde_frame_oracle():
    # independent route through the exterior algebra:
    # nu lap~ psi = wedge_top(d(J d psi), omega~), nu = wedge_top(w~, w~)/2
    p = small_potential(32, seed=9)
    m = reduced_metric(p)
    g = p.grid
    x, y = g.coords()
    psi = TorusField(g, np.sin(2 * np.pi * x) + np.cos(2 * np.pi * (x + y)))
    zero = TorusField(g, np.zeros((32, 32)))
    dpsi = InvariantOneForm(derivative(psi, "x"), zero, derivative(psi, "y"), zero)
    ddc = ext_d(j_one_form(dpsi))
    wt = assemble_omega_tilde(p)
    lhs = 2.0 * wedge_top(ddc, wt).values / wedge_top(wt, wt).values
    np.testing.assert_allclose(laplace_tilde(psi, m).values, lhs, atol=1e-10)


def test_laplace_tilde_degenerate_rejected():
    g = Grid(16)
    x, _ = g.coords()
    # amplitude large enough to drive A = 1 + phi_xx negative somewhere
    p = Potential.from_field(TorusField(g, 0.1 * np.cos(2 * np.pi * x)))
    m = reduced_metric(p)
    assert m.nu.values.min() <= 0.0
    with pytest.raises(DegenerateMetric):
        laplace_tilde(TorusField(g, np.ones((16, 16))), m)
    with pytest.raises(DegenerateMetric):
        key_identity_gap(p)


def test_key_identity_gap_zero_potential():
    gap = key_identity_gap(Potential.zero(Grid(16)))
    np.testing.assert_array_equal(gap.values, 0.0)


def test_key_identity_gap_small_mode():
    n = 128
    g = Grid(n)
    x, y = g.coords()
    p = Potential.from_field(
        TorusField(g, 1e-3 * np.cos(2 * np.pi * x) * np.cos(2 * np.pi * y))
    )
    gap = float(np.abs(key_identity_gap(p).values).max())
    assert gap <= 1e-8


def test_key_identity_gap_refinement_decay():
    # fixed band-limited potential, under-resolved at n = 32: the defect is
    # then truncation-dominated and collapses under refinement
    def phi_values(n, scale):
        rng = np.random.default_rng(42)
        x, y = Grid(n).coords()
        vals = np.zeros((n, n))
        for k in range(-5, 6):
            for l in range(-5, 6):
                if k == 0 and l == 0:
                    continue
                w = 1.0 / (k * k + l * l)
                ph = 2 * np.pi * (k * x + l * y)
                vals += w * (rng.normal() * np.cos(ph) + rng.normal() * np.sin(ph))
        return vals * scale

    ref = phi_values(128, 1.0)
    lap = deriv_values(ref, "xx") + deriv_values(ref, "yy")
    scale = 0.5 / np.abs(lap).max()

    gaps = []
    for n in (32, 64, 128):
        p = Potential.from_field(TorusField(Grid(n), phi_values(n, scale)))
        gaps.append(float(np.abs(key_identity_gap(p).values).max()))
    assert gaps[1] < gaps[0] / 10
    assert gaps[2] < gaps[1] / 10


def test_lemma22_margin_oneD_oracle():
    p, d = oneD_oracle(128)
    assert lemma22_margin(p, d) >= -1e-8


def test_lemma22_margin_zero_solution():
    g = Grid(32)
    p = Potential.zero(g)
    d = DensityData.normalized(TorusField(g, np.zeros((32, 32))))
    assert abs(lemma22_margin(p, d)) < 1e-13


def test_la_inequality_examples():
    eye = np.eye(2)
    assert la_inequality(eye, np.diag([1.0, -1.0])) == pytest.approx(2.0)
    assert la_inequality(eye, eye) == pytest.approx(2.0)  # tr^2 - 2 det = 4 - 2
    assert la_inequality(eye, np.zeros((2, 2))) == 0.0
    with pytest.raises(NotPositiveDefinite):
        la_inequality(np.diag([-1.0, 1.0]), eye)
    with pytest.raises(NotPositiveDefinite):
        la_inequality(np.array([[1.0, 2.0], [2.0, 1.0]]), eye)
    with pytest.raises(ValueError):
        la_inequality(np.eye(3), np.eye(3))


def test_la_inequality_random_nonnegative():
    rng = np.random.default_rng(13)
    for _ in range(1000):
        S = rng.standard_normal((2, 2))
        P = S @ S.T + 1e-12 * np.eye(2)
        Q = rng.standard_normal((2, 2))
        Q = 0.5 * (Q + Q.T)
        assert la_inequality(P, Q) >= 0.0


def test_reconstruct_one_form_compatibility():
    p = small_potential(32, seed=14)
    a = reconstruct_one_form(p)
    np.testing.assert_allclose(a.f2.values, derivative(p.phi, "x").values,
                               atol=1e-13)
    np.testing.assert_allclose(a.f4.values, derivative(p.phi, "y").values,
                               atol=1e-13)
    compat = (derivative(a.f3, "x").values - derivative(a.f1, "y").values
              - a.f4.values)
    assert np.abs(compat).max() < 1e-12
    da = ext_d(a)
    np.testing.assert_allclose(da.c2.values, 0.0, atol=1e-12)
    np.testing.assert_allclose(da.c5.values, 0.0, atol=1e-13)
    # free constants are gauged away
    assert abs(integrate(a.f1)) < 1e-14
    assert abs(integrate(a.f3)) < 1e-14


def test_reconstruct_one_form_nyquist_content():
    # phi with an x-Nyquist column in phi_y; the k = -n/2 modes must land in
    # f1 because no odd-order x-derivative can produce them
    n = 16
    g = Grid(n)
    x, y = g.coords()
    p = Potential.from_field(
        TorusField(g, 1e-3 * np.cos(2 * np.pi * (8 * x + y)))
    )
    a = reconstruct_one_form(p)
    compat = (derivative(a.f3, "x").values - derivative(a.f1, "y").values
              - a.f4.values)
    assert np.abs(a.f4.values).max() > 1e-4  # the mode is actually present
    assert np.abs(compat).max() < 1e-15


def test_omega_tilde_is_omega_plus_exact():
    p = small_potential(32, seed=15)
    a = reconstruct_one_form(p)
    wt = assemble_omega_tilde(p)
    om = omega(p.grid)
    for da_c, wt_c, om_c in zip(ext_d(a).coeffs(), wt.coeffs(), om.coeffs()):
        np.testing.assert_allclose(da_c.values, wt_c.values - om_c.values,
                                   atol=1e-12)
    alpha, beta = cohomology_coeffs(wt)
    np.testing.assert_allclose(alpha, 1.0, atol=1e-13)
    np.testing.assert_allclose(beta, 0.0, atol=1e-13)


def test_metric_matrix_structure():
    p = small_potential(8, seed=16)
    m = reduced_metric(p)
    M = metric_matrix(p)
    n = 8
    np.testing.assert_array_equal(M[0][0].values, m.A.values)
    np.testing.assert_array_equal(M[3][3].values, m.B.values)
    # symmetric, trace 2u, determinant nu^2 pointwise
    stacked = np.empty((n, n, 4, 4))
    for i in range(4):
        for j in range(4):
            stacked[:, :, i, j] = M[i][j].values
    np.testing.assert_array_equal(stacked, np.swapaxes(stacked, 2, 3))
    np.testing.assert_allclose(np.trace(stacked, axis1=2, axis2=3),
                               2.0 * trace_u(p).values, atol=1e-13)
    np.testing.assert_allclose(np.linalg.det(stacked), m.nu.values**2,
                               atol=1e-12)


def test_diagnostics_fragment():
    p = small_potential(32, seed=17)
    m = reduced_metric(p)
    d = DensityData.normalized(TorusField(p.grid, np.log(m.nu.values)))
    diag = diagnostics(p, d)
    expected_keys = {"residual_sup", "residual_l2", "min_nu", "min_A", "sup_u",
                     "lemma22_margin", "key_identity_sup", "alpha", "beta"}
    assert set(diag) == expected_keys
    assert all(np.isfinite(v) for v in diag.values())
    assert diag["residual_sup"] < 1e-13
    np.testing.assert_allclose(diag["alpha"], 1.0, atol=1e-13)
    np.testing.assert_allclose(diag["beta"], 0.0, atol=1e-13)
