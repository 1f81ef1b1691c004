import numpy as np
import pytest

from isokit import shapes
from isokit.errors import ConfigError


def test_icosphere_counts():
    m = shapes.icosphere(3)
    assert (m.n_vertices, m.n_faces) == (10 * 4 ** 3 + 2, 1280)


def test_potato_zero_amplitude_is_icosphere():
    a = shapes.potato(3, 0.0, seed=5)
    b = shapes.icosphere(3)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.faces(), b.faces())


def test_potato_amplitude_bound():
    for seed in range(1, 6):
        r = np.linalg.norm(shapes.potato(3, 0.15, seed).positions, axis=1)
        assert np.abs(r - 1.0).max() <= 0.15 + 1e-12
        assert np.abs(r - 1.0).max() > 0.01


def test_potato_deterministic():
    a, b = shapes.potato(3, seed=3), shapes.potato(3, seed=3)
    assert np.array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, shapes.potato(3, seed=4).positions)


def test_potato_genus_zero():
    assert shapes.potato(4, seed=1).euler_characteristic() == 2


def test_gen_testshape_errors():
    with pytest.raises(ConfigError):
        shapes.gen_testshape("torus")
    with pytest.raises(ConfigError):
        shapes.gen_testshape("potato", amplitude=0.3)
    with pytest.raises(ConfigError):
        shapes.gen_testshape("ellipsoid", radii=(1, -1, 1))
