import math

import numpy as np
import pytest

from nishiperc.compiler import attach_test_spins, compile_program
from nishiperc.dense import entropy as dense_entropy
from nishiperc.dense import evolve as dense_evolve
from nishiperc.dense import log_partition as dense_log_partition
from nishiperc.gaussian import (
    MajoranaState,
    entropy_profile,
    entropy_state,
    evolve_covariance,
    evolve_subspace,
    init_plus,
    log_partition_gaussian,
)
from nishiperc.lattice import LatticeSpec, gauge_fix_temporal, sample_realization
from nishiperc.rng import RngTag


def random_program(seed, L_x=None, L_y=None, boundary=None, p=None, t=None):
    rng = np.random.default_rng(seed)
    L_x = L_x or int(rng.integers(2, 8))
    L_y = L_y or int(rng.integers(1, 7))
    boundary = boundary or ("periodic" if rng.random() < 0.5 else "open")
    p = p if p is not None else float(rng.uniform(0.3, 1.0))
    t = t if t is not None else float(rng.uniform(0.03, 0.245)) * math.pi
    spec = LatticeSpec(L_x, L_y, x_boundary=boundary)
    real = gauge_fix_temporal(sample_realization(spec, t, p, RngTag(seed, 0)))
    return compile_program(spec, t, p, real)


class TestCovarianceAgainstDense:
    def test_plus_state_covariance(self):
        st = init_plus(3)
        for i in range(3):
            assert st.gamma[2 * i + 1, 2 * i] == 1.0
        assert np.allclose(st.gamma @ st.gamma, -np.eye(6))

    @pytest.mark.parametrize("seed", range(40))
    def test_entropy_profiles_match(self, seed):
        prog = random_program(seed)
        ds = dense_evolve(prog)
        gs = evolve_covariance(prog)
        for l in range(prog.n_sites + 1):
            for n in (1, 2, 3):
                assert abs(
                    entropy_state(gs, l, n) - dense_entropy(ds, l, n)
                ) < 1e-9, (seed, l, n)

    @pytest.mark.parametrize("seed", range(20))
    def test_log_partition_matches(self, seed):
        prog = random_program(seed + 1000)
        assert abs(
            log_partition_gaussian(prog) - dense_log_partition(prog)
        ) < 1e-9

    def test_rotated_cut_periodic(self):
        prog = random_program(7, L_x=6, L_y=4, boundary="periodic", p=1.0)
        ds = dense_evolve(prog)
        gs = evolve_covariance(prog)
        for start in range(6):
            for l in range(1, 6):
                assert abs(
                    entropy_state(gs, l, 1, start) - dense_entropy(ds, l, 1, start)
                ) < 1e-9

    def test_test_spin_programs_match(self):
        spec = LatticeSpec(4, 4, x_boundary="open", protocol="surface-code")
        t = 0.11 * math.pi
        real = gauge_fix_temporal(sample_realization(spec, t, 0.8, RngTag(5, 0)))
        prog = attach_test_spins(
            compile_program(spec, t, 0.8, real),
            t,
            0.8,
            np.random.default_rng(3),
            frame=real.frame_flips(),
        )
        ds = dense_evolve(prog)
        gs = evolve_covariance(prog)
        for l in range(prog.n_sites + 1):
            assert abs(entropy_state(gs, l) - dense_entropy(ds, l)) < 1e-9

    def test_purity_preserved(self):
        prog = random_program(42, L_x=8, L_y=8)
        gs = evolve_covariance(prog)
        assert np.allclose(gs.gamma @ gs.gamma, -np.eye(16), atol=1e-10)


class TestSubspaceAgainstCovariance:
    @pytest.mark.parametrize("seed", range(15))
    def test_covariance_recovery(self, seed):
        prog = random_program(seed + 2000, p=1.0)
        gs = evolve_covariance(prog)
        ss = evolve_subspace(prog)
        np.testing.assert_allclose(ss.covariance(), gs.gamma, atol=1e-9)

    def test_rejects_projections(self):
        prog = random_program(3, L_x=5, L_y=5, p=0.5)
        if not any(
            g.kind == "proj_x_plus" for r in prog.rows for g in r.iter_gates()
        ):
            pytest.skip("no projector drawn")
        with pytest.raises(ValueError, match="projection"):
            evolve_subspace(prog)

    def test_incremental_evolution_matches_full(self):
        prog = random_program(11, L_x=6, L_y=6, p=1.0)
        full = evolve_subspace(prog)
        inc = evolve_subspace(prog, rows=prog.rows[:3])
        inc = evolve_subspace(prog, state=inc, rows=prog.rows[3:])
        np.testing.assert_allclose(inc.covariance(), full.covariance(), atol=1e-11)

    def test_entropy_profile_shape(self):
        prog = random_program(1, L_x=6, L_y=4, p=1.0)
        ss = evolve_subspace(prog)
        st = MajoranaState(ss.covariance(), 0.0, 6)
        prof = entropy_profile(st)
        assert prof.shape == (7,)
        assert prof[0] == 0.0 and prof[-1] == 0.0
