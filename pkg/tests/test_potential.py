import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from darboux_forge.potential import (
    Grid,
    PotentialError,
    classify_potential,
    make_builtin_potential,
    read_potential_csv,
    tabulated_potential,
)


def test_builtin_values():
    x = np.array([-2.0, 0.0, 1.5])
    assert np.allclose(make_builtin_potential("harmonic", [2.0])(x), 2 * x**2)
    assert np.allclose(make_builtin_potential("quartic", [0.5])(x), 0.5 * x**4)
    assert np.allclose(make_builtin_potential("shifted_harmonic", [1.0, 4.0])(x), x**2 + 4)


def test_default_stiffness():
    assert make_builtin_potential("harmonic").params == (1.0,)


@pytest.mark.parametrize(
    "name,params",
    [("morse", [1.0]), ("harmonic", [math.nan]), ("harmonic", [-1.0]), ("harmonic", [1.0, 2.0]),
     ("shifted_harmonic", [1.0])],
)
def test_builtin_rejects(name, params):
    with pytest.raises(PotentialError):
        make_builtin_potential(name, params)


@pytest.mark.parametrize("args", [(-1, 1, 5), (0, 1, 101), (-1, -0.5, 101), (-1, math.inf, 101)])
def test_grid_rejects(args):
    with pytest.raises(PotentialError):
        Grid(*args)


def test_grid_refined_halves_spacing():
    g = Grid(-5, 5, 101)
    assert g.refined().h == pytest.approx(g.h / 2)
    assert g.x[0] == -5 and g.x[-1] == 5


def test_table_on_own_grid_returns_samples():
    g = Grid(-3, 3, 61)
    v = np.cos(g.x)
    assert np.array_equal(tabulated_potential(g.x, v).on(g), v)


def test_table_extrapolates_quadratically():
    x = np.linspace(-4, 4, 401)
    V = tabulated_potential(x, x**2)
    # a cubic spline of a parabola is the parabola, and so is its continuation
    assert V(np.array([-6.0, 5.0])) == pytest.approx([36.0, 25.0], rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3.9, 3.9))
def test_table_interpolates_smooth_function(x0):
    x = np.linspace(-4, 4, 801)
    V = tabulated_potential(x, np.sin(x))
    assert abs(V(x0) - math.sin(x0)) < 1e-8


def test_table_rejects_bad_input():
    with pytest.raises(PotentialError):
        tabulated_potential([0, 1, 1, 2], [0, 1, 2, 3])
    with pytest.raises(PotentialError):
        tabulated_potential([0, 1, 2, 3], [0, np.nan, 2, 3])


def test_csv_roundtrip(tmp_path):
    x = np.linspace(-2, 2, 41)
    for header in ("x,V", "x,value"):
        p = tmp_path / "v.csv"
        p.write_text(header + "\n" + "".join(f"{float(a)!r},{float(a * a)!r}\n" for a in x))
        V = read_potential_csv(p)
        assert V(0.5) == pytest.approx(0.25, abs=1e-10)


def test_csv_rejects_poles_and_bad_header(tmp_path):
    p = tmp_path / "v.csv"
    p.write_text("x,value,is_pole\n0,1,0\n1,,1\n2,3,0\n3,4,0\n")
    with pytest.raises(PotentialError, match="pole"):
        read_potential_csv(p)
    p.write_text("a,b\n0,1\n")
    with pytest.raises(PotentialError, match="header"):
        read_potential_csv(p)
    p.write_text("")
    with pytest.raises(PotentialError, match="empty"):
        read_potential_csv(p)


def test_classify_oscillator_confining():
    g = Grid(-10, 10, 20001)
    c = classify_potential(make_builtin_potential("harmonic"), g)
    assert c.label == "confining_regular"
    # over 1 <= |x| <= X: int 4/|x|^3 = 4 (1 - 1/X^2), int 2/|x|^3 = 2 (1 - 1/X^2)
    wide = classify_potential(make_builtin_potential("harmonic"), Grid(-20, 20, 40001))
    assert wide.integral_values[1] == pytest.approx(4.0 * (1 - 1 / 400), rel=1e-5)
    assert wide.integral_values[2] == pytest.approx(2.0 * (1 - 1 / 400), rel=1e-5)
    assert abs(wide.integral_values[1] - c.integral_values[1]) / c.integral_values[1] < 0.01


def test_classify_quartic_and_scattering():
    g = Grid(-10, 10, 20001)
    assert classify_potential(make_builtin_potential("quartic"), g).label == "confining_regular"
    lor = tabulated_potential(g.x, -2.0 / (1 + g.x**2) ** 2)
    assert classify_potential(lor, g).label == "scattering"


def test_classify_zero_potential_unknown():
    g = Grid(-5, 5, 1001)
    assert classify_potential(tabulated_potential(g.x, np.zeros(g.n)), g).label == "unknown"
