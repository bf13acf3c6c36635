import numpy as np
import pytest

from simrep.simulators.testdata import gen_testdata, lift_2d


def test_lift_formula_hand_example():
    # (x, y) = (1, 2) -> (x+y, x-y, xy, x^2, y^2, x^2 y, x y^2, x^3, y^3)
    assert np.array_equal(lift_2d(np.array([1.0, 2.0])),
                          np.array([3.0, -1.0, 2.0, 1.0, 4.0, 2.0, 4.0, 1.0, 8.0]))


def test_lift_origin_is_zero():
    assert np.array_equal(lift_2d(np.zeros(2)), np.zeros(9))


@pytest.mark.parametrize("kind", ["A", "B"])
def test_generated_shapes_and_params(kind):
    points, outputs = gen_testdata(kind, 50, seed=1)
    assert points.shape == (50, 2)
    assert len(outputs) == 50
    for i, out in enumerate(outputs):
        assert out.shape_tag == "vector" and out.dims == (9,)
        assert np.array_equal(out.params, points[i])
        assert np.array_equal(out.data, lift_2d(points[i]))


@pytest.mark.parametrize("kind", ["A", "B"])
def test_injective_on_generated_data(kind):
    points, outputs = gen_testdata(kind, 300, seed=2)
    lifted = np.stack([o.data for o in outputs])
    # brute-force pairwise check: distinct 2-d points give distinct 9-vectors
    for i in range(len(points)):
        same = np.all(lifted == lifted[i], axis=1)
        same_pt = np.all(points == points[i], axis=1)
        assert np.array_equal(same, same_pt)


def test_deterministic():
    p1, o1 = gen_testdata("A", 40, seed=9)
    p2, o2 = gen_testdata("A", 40, seed=9)
    assert np.array_equal(p1, p2)
    p3, _ = gen_testdata("A", 40, seed=10)
    assert not np.array_equal(p1, p3)


def test_kinds_differ_and_validate():
    pa, _ = gen_testdata("A", 40, seed=3)
    pb, _ = gen_testdata("B", 40, seed=3)
    assert not np.array_equal(pa, pb)
    with pytest.raises(ValueError):
        gen_testdata("C", 40, seed=0)
    with pytest.raises(ValueError):
        gen_testdata("A", 5, seed=0)


def test_ring_radii_bimodal():
    points, _ = gen_testdata("B", 400, seed=4)
    radii = np.linalg.norm(points, axis=1)
    inner, outer = radii[::2], radii[1::2]
    assert abs(inner.mean() - 1.0) < 0.1
    assert abs(outer.mean() - 2.0) < 0.1
