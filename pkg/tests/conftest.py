import itertools

import numpy as np
import pytest

from nishiperc.lattice import DisorderRealization, LatticeSpec


def exhaustive_log_z(real: DisorderRealization, beta: float) -> float:
    """Brute-force ln sum_sigma exp(beta * sum_bonds s * sigma sigma')."""
    spec = real.spec
    n = spec.n_sites
    idx = {(x, y): x + spec.L_x * y for y in range(spec.L_y) for x in range(spec.L_x)}
    terms = []
    for (x, y) in np.argwhere(real.mask.spatial):
        terms.append((idx[(x, y)], idx[((x + 1) % spec.L_x, y)], int(real.spatial_sign[x, y])))
    for (x, y) in np.argwhere(real.mask.temporal):
        terms.append((idx[(x, y)], idx[(x, y + 1)], int(real.temporal_sign[x, y])))
    total = 0.0
    for bits in itertools.product((1, -1), repeat=n):
        e = sum(s * bits[i] * bits[j] for i, j, s in terms)
        total += np.exp(beta * e)
    return float(np.log(total))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
