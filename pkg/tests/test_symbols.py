import numpy as np
import pytest

from bergman_kit.symbols import REGISTRY, by_name, constant


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_registry_symbols_are_bounded(name, rng):
    from conftest import random_disc

    for n in (1, 2):
        a = by_name(name, n)
        pts = random_disc(rng, (200, n))
        vals = a(pts)
        assert vals.shape == (200,)
        assert np.all(np.abs(vals) <= a.sup_bound + 1e-12)


def test_factorized_symbol_is_product(rng):
    from conftest import random_disc

    a = by_name("defect", 2)
    pts = random_disc(rng, (50, 2))
    assert np.allclose(a(pts), np.prod(1 - np.abs(pts) ** 2, axis=1))


def test_conj_and_scale(rng):
    from conftest import random_disc

    a = by_name("z1", 1)
    pts = random_disc(rng, (20, 1))
    assert np.allclose(a.conj()(pts), np.conj(pts[:, 0]))
    assert np.allclose(a.scale(2j)(pts), 2j * pts[:, 0])
    assert np.allclose(constant(3.0, 2)(random_disc(rng, (5, 2))), 3.0)


def test_unknown_symbol():
    with pytest.raises(KeyError):
        by_name("nope", 1)
