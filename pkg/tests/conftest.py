import numpy as np
import pytest

from equiproj import (
    LinearLayerSpec,
    make_cyclic,
    make_dihedral,
    regular_representation,
)

TEST_GROUP_FACTORIES = {
    "C2": lambda: make_cyclic(2),
    "C4": lambda: make_cyclic(4),
    "C8": lambda: make_cyclic(8),
    "D3": lambda: make_dihedral(3),
    "D4": lambda: make_dihedral(4),
}


@pytest.fixture(params=sorted(TEST_GROUP_FACTORIES))
def test_group(request):
    return TEST_GROUP_FACTORIES[request.param]()


def random_complex(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_unitary(rng, d):
    q, r = np.linalg.qr(random_complex(rng, (d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_regular_layer(group, rng) -> LinearLayerSpec:
    reg = regular_representation(group)
    w = random_complex(rng, (group.order, group.order))
    return LinearLayerSpec(weight=w, rep_in=reg, rep_out=reg)
