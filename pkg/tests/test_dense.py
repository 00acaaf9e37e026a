import math

import numpy as np
import pytest

from nishiperc.compiler import (
    CircuitProgram,
    GateDescriptor,
    RowProgram,
    compile_program,
)
from nishiperc.dense import (
    born_enumerate,
    entropy,
    evolve,
    log_partition,
)
from nishiperc.lattice import (
    DilutionMask,
    DisorderRealization,
    LatticeSpec,
    gauge_fix_temporal,
    gauge_transform,
    sample_dilution,
    sample_realization,
    sample_signs_nishimori,
    vortices,
)
from nishiperc.rng import RngTag

from conftest import exhaustive_log_z


def toy_program(n_sites, rows_gates, terminal="plus"):
    """Hand-built program (bypasses the compiler) for gate-level checks."""
    spec = LatticeSpec(max(n_sites, 2), len(rows_gates), x_boundary="open")
    rows = [RowProgram(zz=list(gates)) for gates in rows_gates]
    return CircuitProgram(
        spec=spec, t=0.1, p_meas=1.0, rows=rows, n_sites=n_sites, terminal=terminal
    )


class TestEvolve:
    def test_projective_zz_makes_bell_pair(self):
        prog = toy_program(
            2, [[GateDescriptor("weak_zz", 0, x2=1, sign=1, strength=math.inf)]]
        )
        state = evolve(prog)
        assert abs(entropy(state, 1, 1) - math.log(2)) < 1e-12
        amp = state.amplitudes.ravel()
        np.testing.assert_allclose(amp, [2**-0.5, 0, 0, 2**-0.5], atol=1e-12)

    def test_half_coupling_zz_norm_gain_cosh_beta(self):
        # || e^{(beta/2) ZZ} |++> ||^2 = cosh(beta)
        beta = 0.8
        prog = toy_program(
            2, [[GateDescriptor("weak_zz", 0, x2=1, sign=1, strength=beta / 2)]]
        )
        state = evolve(prog)
        assert abs(state.log_weight - 0.5 * math.log(math.cosh(beta))) < 1e-12

    def test_proj_x_plus_idempotent(self):
        g = GateDescriptor("proj_x_plus", 0)
        zz = GateDescriptor("weak_zz", 0, x2=1, sign=1, strength=0.7)
        once = evolve(toy_program(2, [[zz, g]]))
        twice = evolve(toy_program(2, [[zz, g, g]]))
        np.testing.assert_allclose(once.amplitudes, twice.amplitudes, atol=1e-14)

    def test_size_guard(self):
        prog = toy_program(15, [[]])
        with pytest.raises(ValueError, match="guard"):
            evolve(prog)


class TestEntropy:
    def test_product_state_zero(self):
        state = evolve(toy_program(4, [[]]))
        for l in range(5):
            for n in (1, 2, 3, math.inf):
                assert abs(entropy(state, l, n)) < 1e-12

    def test_ghz_ln2(self):
        rows = [[GateDescriptor("weak_zz", i, x2=i + 1, sign=1, strength=math.inf)]
                for i in range(4)]
        state = evolve(toy_program(5, rows))
        for l in range(1, 5):
            for n in (1, 2, 3, math.inf):
                assert abs(entropy(state, l, n) - math.log(2)) < 1e-12

    def test_s2_matches_direct_purity(self, rng):
        # random 10-site nonunitary circuit; S2 = -ln tr(rho^2) by direct square
        n = 10
        gates = []
        for _ in range(20):
            x = rng.integers(0, n - 1)
            gates.append(
                GateDescriptor("weak_zz", int(x), x2=int(x) + 1,
                               sign=int(rng.choice([-1, 1])), strength=rng.uniform(0.1, 1.0))
            )
            gates.append(GateDescriptor("weak_x", int(rng.integers(0, n)), strength=0.3))
        state = evolve(toy_program(n, [gates]))
        l = 4
        m = state.amplitudes.reshape(2**l, 2 ** (n - l))
        rho = m @ m.T
        s2_direct = -math.log(np.trace(rho @ rho))
        assert abs(entropy(state, l, 2) - s2_direct) < 1e-10

    def test_renyi_monotone_in_n(self, rng):
        n = 8
        gates = [
            GateDescriptor("weak_zz", int(x), x2=int(x) + 1, sign=1,
                           strength=rng.uniform(0.2, 1.0))
            for x in rng.integers(0, n - 1, size=12)
        ]
        state = evolve(toy_program(n, [gates]))
        for l in range(1, n):
            s = [entropy(state, l, k) for k in (1, 2, 3, math.inf)]
            assert s[0] >= s[1] >= s[2] >= s[3] - 1e-12


class TestLogPartition:
    def test_free_spins(self):
        spec = LatticeSpec(3, 4)
        mask = DilutionMask(
            spec,
            np.zeros(spec.spatial_shape(), bool),
            np.zeros(spec.temporal_shape(), bool),
        )
        real = DisorderRealization(
            mask,
            np.zeros(spec.spatial_shape(), np.int8),
            np.zeros(spec.temporal_shape(), np.int8),
        )
        prog = compile_program(spec, 0.1 * np.pi, 0.0, real)
        assert abs(log_partition(prog) - spec.n_sites * math.log(2)) < 1e-10

    @pytest.mark.parametrize("boundary", ["open", "periodic"])
    @pytest.mark.parametrize("flip_bond", [False, True])
    def test_matches_exhaustive_sum_2x2(self, boundary, flip_bond):
        beta = 1.0
        t = 0.5 * math.asin(math.tanh(beta))
        spec = LatticeSpec(2, 2, x_boundary=boundary)
        mask = DilutionMask(
            spec,
            np.ones(spec.spatial_shape(), bool),
            np.ones(spec.temporal_shape(), bool),
        )
        sp = np.ones(spec.spatial_shape(), np.int8)
        tp = np.ones(spec.temporal_shape(), np.int8)
        if flip_bond:
            sp[0, 1] = -1
        real = DisorderRealization(mask, sp, tp)
        expected = exhaustive_log_z(real, beta)
        prog = compile_program(spec, t, 1.0, gauge_fix_temporal(real))
        assert abs(log_partition(prog) - expected) < 1e-10

    def test_matches_exhaustive_sum_diluted_3x3(self, rng):
        beta = 0.7
        t = 0.5 * math.asin(math.tanh(beta))
        spec = LatticeSpec(3, 3, x_boundary="open")
        mask = sample_dilution(spec, 0.7, rng)
        real = sample_signs_nishimori(mask, t, rng)
        expected = exhaustive_log_z(real, beta)
        prog = compile_program(spec, t, 0.7, gauge_fix_temporal(real))
        assert abs(log_partition(prog) - expected) < 1e-9


class TestGaugeInvarianceOfEntropy:
    def test_entropy_profile_gauge_invariant(self, rng):
        spec = LatticeSpec(6, 6, x_boundary="open")
        mask = sample_dilution(spec, 0.8, rng)
        real = sample_signs_nishimori(mask, 0.11 * np.pi, rng)
        t = 0.11 * np.pi
        profiles = []
        for flip_seed in (None, 1, 2):
            r = real
            if flip_seed is not None:
                flips = np.random.default_rng(flip_seed).random((6, 6)) < 0.5
                r = gauge_transform(real, flips)
            prog = compile_program(spec, t, 0.8, gauge_fix_temporal(r))
            state = evolve(prog)
            profiles.append([entropy(state, l) for l in range(7)])
        for p in profiles[1:]:
            np.testing.assert_allclose(p, profiles[0], atol=1e-10)


class TestBornEnumerate:
    def test_projective_all_weight_on_zero_vortex(self):
        spec = LatticeSpec(3, 2, x_boundary="open")
        mask = DilutionMask(
            spec,
            np.ones(spec.spatial_shape(), bool),
            np.ones(spec.temporal_shape(), bool),
        )
        dist = born_enumerate(spec, np.pi / 4, mask)
        flat = np.zeros((2, 1), np.int8)  # 2 plaquettes, all unfrustrated
        from nishiperc.lattice import VortexConfig

        assert abs(dist[VortexConfig(flat).key()] - 1.0) < 1e-12

    def test_small_t_near_uniform_over_signs(self):
        # beta -> 0: every sign configuration equally likely, so the vortex
        # distribution approaches the counting measure
        spec = LatticeSpec(2, 2, x_boundary="open")
        mask = DilutionMask(
            spec,
            np.ones(spec.spatial_shape(), bool),
            np.ones(spec.temporal_shape(), bool),
        )
        dist = born_enumerate(spec, 1e-4, mask)
        # single plaquette: m=0 and m=1 each carry half of the 16 configs
        assert abs(sum(dist.values()) - 1.0) < 1e-12
        assert all(abs(p - 0.5) < 1e-3 for p in dist.values())

    def test_matches_gauge_symmetrized_iid_sampling(self):
        # the Nishimori identity: empirical vortex law from iid+gauge sampling
        # agrees with the exact Born enumeration
        spec = LatticeSpec(3, 3, x_boundary="open")
        t = 0.143 * np.pi
        mask = DilutionMask(
            spec,
            np.ones(spec.spatial_shape(), bool),
            np.ones(spec.temporal_shape(), bool),
        )
        exact = born_enumerate(spec, t, mask)
        rng = np.random.default_rng(2024)
        counts: dict = {}
        n_samp = 20000
        for _ in range(n_samp):
            real = sample_signs_nishimori(mask, t, rng)
            k = vortices(real).key()
            counts[k] = counts.get(k, 0) + 1
        tv = 0.5 * sum(
            abs(counts.get(k, 0) / n_samp - p)
            for k in set(exact) | set(counts)
            for p in [exact.get(k, 0.0)]
        )
        assert tv < 0.02
