import numpy as np
import pytest

from ktcy import (
    Grid,
    NonZeroMeanInput,
    TorusField,
    derivative,
    integrate,
    invert_laplacian,
    load_ktcy,
    resample,
    save_csv,
    save_ktcy,
)
from ktcy.torus_grid import deriv_values, second_deriv_values


def single_mode(grid, k, l, kind="cos"):
    x, y = grid.coords()
    phase = 2 * np.pi * (k * x + l * y)
    return TorusField(grid, np.cos(phase) if kind == "cos" else np.sin(phase))


def test_grid_validation():
    Grid(4)
    Grid(256)
    for bad in (3, 2, 0, -8, 7):
        with pytest.raises(ValueError):
            Grid(bad)
    assert Grid(32).h == 1.0 / 32


def test_grid_coords_layout():
    g = Grid(8)
    x, y = g.coords()
    assert x.shape == (8, 8) and y.shape == (8, 8)
    # x varies along axis 0, y along axis 1
    assert np.all(x[:, 0] == np.arange(8) / 8)
    assert np.all(x[:, 3] == x[:, 0])
    assert np.all(y[0, :] == np.arange(8) / 8)


def test_field_validation_and_immutability():
    g = Grid(8)
    with pytest.raises(ValueError):
        TorusField(g, np.zeros((8, 4)))
    with pytest.raises(ValueError):
        TorusField(g, np.full((8, 8), np.nan))
    f = TorusField(g, np.ones((8, 8)))
    with pytest.raises(ValueError):
        f.values[0, 0] = 2.0
    # constructor copies its input
    src = np.zeros((8, 8))
    f2 = TorusField(g, src)
    src[0, 0] = 99.0
    assert f2.values[0, 0] == 0.0


def test_field_mixed_grid_arithmetic_raises():
    a = TorusField(Grid(8), np.ones((8, 8)))
    b = TorusField(Grid(16), np.ones((16, 16)))
    with pytest.raises(ValueError):
        a + b


def test_first_derivatives_single_mode():
    g = Grid(32)
    x, y = g.coords()
    f = single_mode(g, 1, 0)
    np.testing.assert_allclose(
        derivative(f, "x").values, -2 * np.pi * np.sin(2 * np.pi * x), atol=1e-12
    )
    np.testing.assert_allclose(derivative(f, "y").values, 0.0, atol=1e-13)
    f2 = single_mode(g, 0, 3, "sin")
    np.testing.assert_allclose(
        derivative(f2, "y").values, 6 * np.pi * np.cos(6 * np.pi * y), atol=1e-11
    )


def test_second_and_mixed_derivatives():
    g = Grid(32)
    x, y = g.coords()
    f = TorusField(g, np.cos(2 * np.pi * (2 * x + y)))
    np.testing.assert_allclose(
        derivative(f, "xx").values, -16 * np.pi**2 * f.values, atol=1e-9
    )
    np.testing.assert_allclose(
        derivative(f, "xy").values, -8 * np.pi**2 * f.values, atol=1e-9
    )
    # mixed partials commute and agree with the one-shot multiplier
    via_two = derivative(derivative(f, "x"), "y")
    np.testing.assert_allclose(derivative(f, "xy").values, via_two.values, atol=1e-9)


def test_second_deriv_values_matches_single_calls():
    rng = np.random.default_rng(11)
    g = Grid(16)
    vals = rng.standard_normal((16, 16))
    fxx, fyy, fxy = second_deriv_values(vals)
    np.testing.assert_allclose(fxx, deriv_values(vals, "xx"), atol=1e-10)
    np.testing.assert_allclose(fyy, deriv_values(vals, "yy"), atol=1e-10)
    np.testing.assert_allclose(fxy, deriv_values(vals, "xy"), atol=1e-10)


def test_unknown_derivative_label():
    f = TorusField(Grid(8), np.zeros((8, 8)))
    with pytest.raises(ValueError):
        derivative(f, "xz")


def test_nyquist_conventions():
    # the sawtooth mode cos(pi*n*x) alternates signs along x
    g = Grid(16)
    vals = np.cos(np.pi * 16 * g.coords()[0])
    assert np.allclose(np.abs(vals), 1.0)
    f = TorusField(g, vals)
    # odd order: the Nyquist mode has no well-defined slope, reported as 0
    np.testing.assert_allclose(derivative(f, "x").values, 0.0, atol=1e-9)
    # even order keeps it: (2*pi*(n/2))^2 with a sign
    np.testing.assert_allclose(
        derivative(f, "xx").values, -(np.pi * 16) ** 2 * vals, rtol=1e-12
    )


def test_derivative_has_zero_mean():
    rng = np.random.default_rng(3)
    f = TorusField(Grid(32), rng.standard_normal((32, 32)))
    for which in ("x", "y", "xx", "yy", "xy"):
        assert abs(integrate(derivative(f, which))) < 1e-13


def test_summation_by_parts():
    rng = np.random.default_rng(5)
    g = Grid(32)
    f = TorusField(g, rng.standard_normal((32, 32)))
    h = TorusField(g, rng.standard_normal((32, 32)))
    lhs = integrate(f * derivative(h, "x"))
    rhs = -integrate(derivative(f, "x") * h)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_integrate_is_mean():
    g = Grid(8)
    f = TorusField(g, np.full((8, 8), 3.25))
    assert integrate(f) == 3.25
    assert abs(integrate(single_mode(g, 1, 2))) < 1e-15


def test_invert_laplacian_single_mode():
    g = Grid(32)
    f = single_mode(g, 2, 3)
    sol = invert_laplacian(f)
    scale = -1.0 / (4 * np.pi**2 * (4 + 9))
    np.testing.assert_allclose(sol.values, scale * f.values, atol=1e-15)
    # round trip back through the flat Laplacian
    lap = derivative(sol, "xx") + derivative(sol, "yy")
    np.testing.assert_allclose(lap.values, f.values, atol=1e-12)


def test_invert_laplacian_roundtrip_random():
    rng = np.random.default_rng(17)
    g = Grid(32)
    vals = rng.standard_normal((32, 32))
    vals -= vals.mean()
    f = TorusField(g, vals)
    sol = invert_laplacian(f)
    assert abs(integrate(sol)) < 1e-14
    lap = derivative(sol, "xx") + derivative(sol, "yy")
    np.testing.assert_allclose(lap.values, vals, atol=1e-11)


def test_invert_laplacian_rejects_nonzero_mean():
    g = Grid(8)
    with pytest.raises(NonZeroMeanInput):
        invert_laplacian(TorusField(g, np.full((8, 8), 1e-6)))
    # custom tolerance lets a small constant offset through
    out = invert_laplacian(TorusField(g, np.full((8, 8), 1e-6)), mean_tol=1e-3)
    np.testing.assert_allclose(out.values, 0.0, atol=1e-15)


def test_resample_band_limited_exact():
    coarse = Grid(16)
    f = single_mode(coarse, 2, 1)
    fine = resample(f, 32)
    assert fine.grid.n == 32
    expected = single_mode(Grid(32), 2, 1)
    np.testing.assert_allclose(fine.values, expected.values, atol=1e-13)
    # restriction back is exact too
    back = resample(fine, 16)
    np.testing.assert_allclose(back.values, f.values, atol=1e-13)
    assert abs(integrate(fine) - integrate(f)) < 1e-15


def test_resample_same_n_is_identity():
    f = single_mode(Grid(16), 1, 1)
    assert resample(f, 16) is f


def test_ktcy_roundtrip(tmp_path):
    rng = np.random.default_rng(23)
    g = Grid(12)
    f = TorusField(g, rng.standard_normal((12, 12)))
    path = tmp_path / "field.ktcy"
    save_ktcy(f, path)
    loaded = load_ktcy(path)
    assert loaded.grid.n == 12
    assert np.array_equal(loaded.values, f.values)  # bit-exact
    save_ktcy(loaded, tmp_path / "again.ktcy")
    assert (tmp_path / "again.ktcy").read_bytes() == path.read_bytes()


def test_ktcy_header_layout(tmp_path):
    g = Grid(4)
    f = TorusField(g, np.zeros((4, 4)))
    path = tmp_path / "z.ktcy"
    save_ktcy(f, path)
    blob = path.read_bytes()
    assert blob[:4] == b"KTCY"
    assert blob[4:8] == (4).to_bytes(4, "little")
    assert len(blob) == 8 + 8 * 16


def test_ktcy_malformed(tmp_path):
    good = tmp_path / "good.ktcy"
    save_ktcy(TorusField(Grid(4), np.zeros((4, 4))), good)
    blob = good.read_bytes()

    bad_magic = tmp_path / "bad_magic.ktcy"
    bad_magic.write_bytes(b"NOPE" + blob[4:])
    with pytest.raises(ValueError, match="magic"):
        load_ktcy(bad_magic)

    truncated = tmp_path / "trunc.ktcy"
    truncated.write_bytes(blob[:-8])
    with pytest.raises(ValueError):
        load_ktcy(truncated)

    short = tmp_path / "short.ktcy"
    short.write_bytes(b"KTCY\x04")
    with pytest.raises(ValueError):
        load_ktcy(short)


def test_csv_dump(tmp_path):
    g = Grid(4)
    vals = np.arange(16, dtype=float).reshape(4, 4) / 7
    save_csv(TorusField(g, vals), tmp_path / "f.csv")
    rows = (tmp_path / "f.csv").read_text().strip().splitlines()
    assert len(rows) == 4
    parsed = np.array([[float(tok) for tok in row.split(",")] for row in rows])
    assert np.array_equal(parsed, vals)  # %.17g survives the round trip
