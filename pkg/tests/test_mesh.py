import numpy as np
import pytest

from sgmfem.mesh import BcConfig, build_unit_square, refine_uniform


def test_single_cell():
    m = build_unit_square(0)
    assert m.n_elements == 1
    assert len(m.vertices) == 4
    assert np.sum(m.boundary_tags == "D") == 4


def test_level_three_counts():
    m = build_unit_square(3)
    assert m.n_elements == 64
    assert len(m.vertices) == 81
    np.testing.assert_allclose(m.element_areas(), 1 / 64)


def test_neumann_right_side():
    m = build_unit_square(2, BcConfig(frozenset({"right"})))
    assert len(m.boundary_tags) == 16
    assert np.sum(m.boundary_tags == "N") == 4
    assert set(m.boundary_sides[m.boundary_tags == "N"]) == {"right"}


def test_boundary_partition():
    m = build_unit_square(3, BcConfig(frozenset({"right", "top"})))
    assert set(m.boundary_tags) == {"D", "N"}
    assert len(m.boundary_edges) == 4 * m.n
    assert m.bc.dirichlet_edges == {"bottom", "left"}


@pytest.mark.parametrize("level", [0, 3])
def test_refinement_quadruples(level):
    m = build_unit_square(level)
    assert refine_uniform(m).n_elements == 4 * m.n_elements


def test_refinement_inherits_tags():
    m = refine_uniform(build_unit_square(1, BcConfig(frozenset({"right"}))))
    assert m.level == 2
    right = m.boundary_sides == "right"
    assert np.all(m.boundary_tags[right] == "N") and right.sum() == 4


def test_invalid_inputs():
    with pytest.raises(ValueError):
        build_unit_square(-1)
    with pytest.raises(ValueError):
        BcConfig(frozenset({"bottom", "right", "top", "left"}))
    with pytest.raises(ValueError):
        BcConfig(frozenset({"north"}))


def test_cell_centres_inside():
    m = build_unit_square(2)
    c = m.centers
    assert c.shape == (16, 2)
    assert np.all((c > 0) & (c < 1))
