import cmath
import math

import numpy as np
import pytest

from linlab.maps import (OracleLinearizer, PolynomialMap, QRPowerMap, critical_orbit_escapes,
                         exceptional_values, find_fixed_points, oracle_eval, periodic_points,
                         qr_power_eval)
from linlab.extrange import LogPolarComplex, ZERO

C = -0.8 + 0.157j


def test_square_fixed_points(square_map):
    fps = find_fixed_points(square_map)
    assert [round(abs(f.point), 12) for f in fps] == [0, 1]
    assert fps[0].classification == "attracting" and fps[1].classification == "repelling"
    assert fps[1].multiplier == pytest.approx(2)


def test_web_map_repelling_point(web_map):
    # independent oracle: quadratic formula
    z0 = (1 + cmath.sqrt(1 - 4 * C)) / 2
    rep = sorted((f for f in find_fixed_points(web_map) if f.repelling),
                 key=lambda f: -abs(f.multiplier))
    assert rep[0].point == pytest.approx(z0, abs=1e-12)
    assert round(rep[0].point.real, 3) == 1.528 and round(rep[0].point.imag, 3) == -0.076
    assert rep[0].multiplier == pytest.approx(2 * z0, abs=1e-12)
    assert abs(rep[0].multiplier) == pytest.approx(3.059, abs=5e-4)


def test_square_two_cycle(square_map):
    pts = periodic_points(square_map, 2)
    assert len(pts) == 2
    got = sorted(pts, key=lambda t: t[0].imag)
    assert got[0][0] == pytest.approx(cmath.exp(4j * math.pi / 3), abs=1e-10)
    assert got[1][0] == pytest.approx(cmath.exp(2j * math.pi / 3), abs=1e-10)
    for _, period, mult, cls in pts:
        assert period == 2 and mult == pytest.approx(4) and cls == "repelling"


def test_web_map_two_cycle(web_map):
    pts = periodic_points(web_map, 2)
    roots = np.roots([1, 1, C + 1])
    assert len(pts) == 2
    for z, _, mult, cls in pts:
        assert np.min(np.abs(roots - z)) < 1e-10
        assert mult == pytest.approx(4 * C + 4, abs=1e-9)
        assert cls == "repelling"


def test_square_three_cycles(square_map):
    pts = periodic_points(square_map, 3)
    assert len(pts) == 6
    for z, _, mult, _ in pts:
        assert abs(z) == pytest.approx(1, abs=1e-10)
        assert z ** 7 == pytest.approx(1, abs=1e-9)
        assert mult == pytest.approx(8, abs=1e-8)


def test_period_out_of_range(square_map):
    with pytest.raises(ValueError):
        periodic_points(square_map, 5)


@pytest.mark.parametrize("coeffs,expected", [
    ([0, 0, 1], {0j}),
    ([C, 0, 1], set()),
    ([2, -2, 1], {1 + 0j}),      # (z - 1)^2 + 1
])
def test_exceptional_values(coeffs, expected):
    assert exceptional_values(PolynomialMap(coeffs)) == expected


def test_qr_power_examples():
    assert qr_power_eval(QRPowerMap(2, 2), 2) == pytest.approx(16)
    assert qr_power_eval(QRPowerMap(1, 3), 2j) == pytest.approx(-8j)
    out = qr_power_eval(QRPowerMap(1.5, 2), 4 * cmath.exp(1j * math.pi / 4))
    assert abs(out) == pytest.approx(64) and cmath.phase(out) == pytest.approx(math.pi / 2)
    assert qr_power_eval(QRPowerMap(2, 2), 0) == 0
    assert qr_power_eval(QRPowerMap(2, 2), ZERO) is ZERO
    assert qr_power_eval(QRPowerMap(2, 2), LogPolarComplex(1000, 0.1)) == LogPolarComplex(4000, 0.2)


def test_qr_rejects_bad_parameters():
    with pytest.raises(ValueError):
        QRPowerMap(0.5, 2)


def test_oracles():
    e = OracleLinearizer.exp_for_power_map()
    assert oracle_eval(e, 0) == 1
    assert oracle_eval(e, 1) == pytest.approx(2.718281828, abs=1e-9)
    assert oracle_eval(e, 1) ** 2 == pytest.approx(oracle_eval(e, 2), rel=1e-14)
    c = OracleLinearizer.cosh_for_chebyshev()
    assert oracle_eval(c, 1) == pytest.approx(3.0862, abs=1e-4)
    assert oracle_eval(c, 4) == pytest.approx(oracle_eval(c, 1) ** 2 - 2, rel=1e-13)


def test_polynomial_validation():
    with pytest.raises(ValueError):
        PolynomialMap([1, 2])
    with pytest.raises(ValueError):
        PolynomialMap.from_pairs([[1, 2], [3]])
    assert PolynomialMap([1, 0, 1, 0]).degree == 2


def test_iterate_coefficients_match_composition(web_map):
    z = 0.3 - 0.4j
    coeffs = web_map.iterate_coefficients(3)
    assert np.polynomial.polynomial.polyval(z, coeffs) == pytest.approx(web_map.iterate(z, 3))


def test_cantor_test():
    assert critical_orbit_escapes(PolynomialMap.quadratic(1.0))
    # this parameter sits just outside the period-2 bulb; escape takes ~230 steps
    assert critical_orbit_escapes(PolynomialMap.quadratic(C))
    assert not critical_orbit_escapes(PolynomialMap.quadratic(-1.0))
