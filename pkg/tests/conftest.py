import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

warnings.filterwarnings("ignore", message=".*TBB.*")

# numba compilation makes first calls slow; deadlines would misfire
settings.register_profile(
    "fermatph",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("fermatph")


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Compile the jitted kernels once so individual tests time cleanly."""
    import fermatph as fp

    cloud = fp.gen_uniform_manifold("circle", 12, 0.0, 0)
    D = fp.fermat_matrix(cloud, 2.0)
    fp.persistent_homology(fp.rips_filtration(D, max_dim=1))
    fp.h0_mst(D)
    fp.epsilon_star(cloud)
    dgm = fp.persistent_homology(fp.rips_filtration(D, max_dim=0))
    fp.bottleneck(dgm, dgm, 0)
    yield


def rng(seed):
    return np.random.Generator(np.random.Philox(seed))
