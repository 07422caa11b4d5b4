import numpy as np
import pytest

from bornlab.optics import combination_mask_for_plate, triple_slit_plate


@pytest.fixture
def plate():
    return triple_slit_plate()


@pytest.fixture
def mask(plate):
    return combination_mask_for_plate(plate)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_triple(rng):
    z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    return [complex(v) for v in z]
