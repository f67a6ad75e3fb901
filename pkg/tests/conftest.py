import numpy as np
import pytest

from assm.fixtures import (
    default_femur_spec,
    default_scapula_spec,
    sample_family,
)
from assm.mapping import build_anat, build_oc_anat, fit_mapping, orthogonal_procrustes
from assm.morphometry import FEMUR_RECIPE, SCAPULA_RECIPE
from assm.population import generate_population
from assm.ssm import build_base


def random_rotation(rng) -> np.ndarray:
    a = rng.standard_normal((3, 3))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@pytest.fixture(scope="session")
def femur_family():
    return sample_family(default_femur_spec(n_samples=30, seed=1))


@pytest.fixture(scope="session")
def femur_base(femur_family):
    return build_base(femur_family.dataset)


@pytest.fixture(scope="session")
def femur_pop(femur_base, femur_family):
    return generate_population(femur_base, FEMUR_RECIPE, femur_family.landmarks,
                               1000, seed=7)


@pytest.fixture(scope="session")
def femur_models(femur_base, femur_pop):
    q = fit_mapping(femur_pop)
    k = orthogonal_procrustes(q)
    return (build_anat(femur_base, q, femur_pop.stats),
            build_oc_anat(femur_base, k, femur_pop.stats))


@pytest.fixture(scope="session")
def scapula_family():
    return sample_family(default_scapula_spec(n_samples=20, seed=2))


@pytest.fixture(scope="session")
def scapula_models(scapula_family):
    base = build_base(scapula_family.dataset)
    pop = generate_population(base, SCAPULA_RECIPE, scapula_family.landmarks,
                              800, seed=3)
    q = fit_mapping(pop)
    k = orthogonal_procrustes(q)
    return build_anat(base, q, pop.stats), build_oc_anat(base, k, pop.stats)
