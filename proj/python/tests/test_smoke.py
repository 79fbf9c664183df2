import math

import numpy as np
import pytest

import diffgeo

UNIT = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)


def test_polygon_ops():
    assert diffgeo.polygon_area(UNIT) == 1.0
    poly, flags = diffgeo.intersect(UNIT, UNIT + 0.5)
    assert poly.shape == (4, 2)
    assert math.isclose(diffgeo.polygon_area(poly), 0.25)
    assert "CrossP1P2(1,0)" in flags and "FromP1(2)" in flags
    assert math.isclose(diffgeo.polygon_iou(UNIT, UNIT + 0.5), 1 / 7, abs_tol=1e-12)
    assert diffgeo.polygon_iou(UNIT, UNIT + 5) == 0.0


def test_polygon_iou_grad_matches_finite_differences():
    a, b = UNIT, UNIT + 0.5
    g1, g2 = diffgeo.polygon_iou_grad(a, b)
    assert g1.shape == (4, 2) and g2.shape == (4, 2)
    assert math.isclose(g1[2, 0], 10 / 49, abs_tol=1e-12)
    h = 1e-6
    bumped = a.copy()
    bumped[2, 0] += h
    plus = diffgeo.polygon_iou(bumped, b)
    bumped[2, 0] -= 2 * h
    minus = diffgeo.polygon_iou(bumped, b)
    assert math.isclose((plus - minus) / (2 * h), g1[2, 0], rel_tol=1e-6)


def test_invalid_polygons_raise_with_code():
    with pytest.raises(diffgeo.DiffgeoError) as err:
        diffgeo.polygon_area(UNIT[::-1])
    assert err.value.code == "NotCCW"
    with pytest.raises(ValueError):
        diffgeo.polygon_area(UNIT[:2])


def test_boxes():
    sq = [0, 0, 2, 2, 0]
    assert diffgeo.box_iou_2d(sq, sq) == 1.0
    ai = 8 * (math.sqrt(2) - 1)
    assert math.isclose(diffgeo.box_iou_2d(sq, [0, 0, 2, 2, math.pi / 4]), ai / (8 - ai), rel_tol=1e-12)
    np.testing.assert_allclose(
        diffgeo.box_to_polygon([1, 1, 2, 4, math.pi / 2]),
        [[3, 0], [3, 2], [-1, 2], [-1, 0]],
        atol=1e-15,
    )
    g1, g2 = diffgeo.box_iou_2d_grad(sq, [0.3, 0.1, 1.5, 2.5, 0.2])
    assert g1.shape == (5,) and g2.shape == (5,)

    cube = [0, 0, 0, 1, 1, 1, 0]
    assert math.isclose(diffgeo.box_iou_3d(cube, [0.5, 0.5, 0.5, 1, 1, 1, 0]), 1 / 15, rel_tol=1e-12)
    g1, g2 = diffgeo.box_iou_3d_grad(cube, [0, 0, 1, 1, 1, 1, 0])
    assert not g1.any() and not g2.any()

    with pytest.raises(diffgeo.DiffgeoError) as err:
        diffgeo.box_iou_2d([0, 0, -1, 1, 0], sq)
    assert err.value.code == "InvalidBox"


def test_batch_matches_serial():
    rng = np.random.default_rng(0)
    n = 64
    a = np.column_stack([rng.uniform(-2, 2, (n, 2)), rng.uniform(0.5, 3, (n, 2)), rng.uniform(-3, 3, n)])
    b = np.column_stack([rng.uniform(-2, 2, (n, 2)), rng.uniform(0.5, 3, (n, 2)), rng.uniform(-3, 3, n)])

    values = diffgeo.batch_iou_2d(a, b)
    assert values.shape == (n,)
    assert all(values[k] == diffgeo.box_iou_2d(a[k], b[k]) for k in range(n))

    values, g1, g2 = diffgeo.batch_iou_2d(a, b, with_grad=True, threads=3)
    assert g1.shape == (n, 5) and g2.shape == (n, 5)
    s1, s2 = diffgeo.box_iou_2d_grad(a[7], b[7])
    assert (g1[7] == s1).all() and (g2[7] == s2).all()

    matrix = diffgeo.batch_iou_2d(a[:3], b[:5], mode="cartesian")
    assert matrix.shape == (3, 5)
    assert matrix[2, 4] == diffgeo.box_iou_2d(a[2], b[4])

    with pytest.raises(diffgeo.DiffgeoError) as err:
        diffgeo.batch_iou_2d(a[:3], b[:5], mode="cartesian", with_grad=True)
    assert err.value.code == "GradUnsupportedInCartesian"
    with pytest.raises(diffgeo.DiffgeoError) as err:
        diffgeo.batch_iou_2d(a[:3], b[:5])
    assert err.value.code == "LengthMismatch"


def test_batch_3d():
    cubes = np.array([[0, 0, 0, 1, 1, 1, 0], [3, 3, 3, 2, 1, 1, 0.4]], dtype=float)
    np.testing.assert_array_equal(diffgeo.batch_iou_3d(cubes, cubes), [1.0, 1.0])
    values, g1, g2 = diffgeo.batch_iou_3d(cubes, cubes + [0.5, 0.5, 0.5, 0, 0, 0, 0], with_grad=True)
    assert math.isclose(values[0], 1 / 15, rel_tol=1e-12)
    assert g1.shape == (2, 7)
