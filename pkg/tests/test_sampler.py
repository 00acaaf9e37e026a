import math

import numpy as np
import pytest

from nishiperc.clifford import (
    entropy_profile_clifford,
    evolve_clifford,
    init_plus_clifford,
    steady_state_rows_clifford,
)
from nishiperc.compiler import compile_program, couplings_from_t
from nishiperc.gaussian import (
    entropy_profile,
    entropy_profile_subspace,
    evolve_subspace,
    init_plus_subspace,
    steady_state_rows,
)
from nishiperc.lattice import (
    DilutionMask,
    DisorderRealization,
    LatticeSpec,
    gauge_fix_temporal,
    sample_realization,
)
from nishiperc.rng import RngTag
from nishiperc.sampler import (
    SteadyStateProtocol,
    clean_entropy_profile_mps,
    coherent_info_sample,
    coherent_info_campaign,
    entropy_campaign,
    entropy_chain_clifford,
    entropy_chain_gaussian,
    free_energy_sample,
    pick_backend,
)


class TestRowDriverEquivalence:
    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_clifford_chunk_matches_program(self, seed):
        L, L_y = 6, 8
        spec = LatticeSpec(L, L_y)
        real = gauge_fix_temporal(
            sample_realization(spec, math.pi / 4, 0.7, RngTag(seed, 0))
        )
        prog = compile_program(spec, math.pi / 4, 0.7, real)
        ref = entropy_profile_clifford(evolve_clifford(prog))

        sp_meas = real.mask.spatial.T.copy()
        sp_sign = real.spatial_sign.T.copy()
        tp_meas = np.ones((L_y, L), dtype=bool)
        tp_meas[:-1] = real.mask.temporal.T
        st = init_plus_clifford(L)
        steady_state_rows_clifford(st, sp_meas, sp_sign, tp_meas)
        np.testing.assert_array_equal(entropy_profile_clifford(st), ref)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_subspace_chunk_matches_program(self, seed):
        # p = 1 realization with an empty trailing ZZ row so the program
        # ends, like the chunk driver, on a full-strength X layer
        L, R = 6, 7
        t = 0.1 * math.pi
        rng = np.random.default_rng(seed)
        spec = LatticeSpec(L, R + 1)
        sp_mask = np.ones(spec.spatial_shape(), bool)
        sp_mask[:, R] = False
        tp_mask = np.ones(spec.temporal_shape(), bool)
        raw = np.where(rng.random(spec.spatial_shape()) < 0.8, 1, -1).astype(np.int8)
        raw[:, R] = 0
        taus = np.where(rng.random(spec.temporal_shape()) < 0.8, 1, -1).astype(np.int8)
        real = gauge_fix_temporal(
            DisorderRealization(DilutionMask(spec, sp_mask, tp_mask), raw, taus)
        )
        prog = compile_program(spec, t, 1.0, real)
        ref = evolve_subspace(prog)
        ls = range(L + 1)

        # streaming frame: effective sign = raw * frame_i * frame_{i+1}
        cpl = couplings_from_t(t)
        frame = np.ones(L, dtype=np.int8)
        signs = np.empty((R, L), dtype=np.int8)
        for y in range(R):
            signs[y] = raw[:, y] * frame * np.roll(frame, -1)
            frame = frame * taus[:, y]
        st = init_plus_subspace(L)
        steady_state_rows(st, signs, cpl.beta, cpl.beta_prime)
        np.testing.assert_allclose(
            entropy_profile_subspace(st, ls),
            entropy_profile_subspace(ref, ls),
            atol=1e-10,
        )

    def test_qr_interval_does_not_change_physics(self):
        rng = np.random.default_rng(8)
        L, R = 10, 12
        cpl = couplings_from_t(0.143 * math.pi)
        signs = np.where(rng.random((R, L)) < 0.8, 1, -1).astype(np.int8)
        a = steady_state_rows(init_plus_subspace(L), signs, cpl.beta,
                              cpl.beta_prime, qr_every=1)
        b = steady_state_rows(init_plus_subspace(L), signs, cpl.beta,
                              cpl.beta_prime, qr_every=4)
        ls = range(L + 1)
        np.testing.assert_allclose(
            entropy_profile_subspace(a, ls), entropy_profile_subspace(b, ls),
            atol=1e-9,
        )

    def test_subspace_driver_shape_check(self):
        st = init_plus_subspace(6)
        with pytest.raises(ValueError, match="shape"):
            steady_state_rows(st, np.ones((3, 5), np.int8), 0.3, 0.4)


class TestSteadyStateChains:
    def test_protocol_defaults(self):
        proto = SteadyStateProtocol(L=16, n_snapshots=3)
        assert proto.therm_rows == 64 and proto.cadence == 8
        proto = SteadyStateProtocol(L=16, n_snapshots=3, therm_rows=10, cadence=2)
        assert proto.therm_rows == 10 and proto.cadence == 2

    def test_clifford_chain_deterministic(self):
        proto = SteadyStateProtocol(L=8, n_snapshots=3)
        ls = [2, 4, 6]
        rows1, S1 = entropy_chain_clifford(8, 0.5, 7, 0, proto, ls)
        rows2, S2 = entropy_chain_clifford(8, 0.5, 7, 0, proto, ls)
        np.testing.assert_array_equal(S1, S2)
        assert rows1 == [36, 40, 44]
        assert S1.shape == (3, 1, 3)
        # stabilizer entropies are integer multiples of ln 2
        np.testing.assert_allclose(
            S1 / math.log(2.0), np.round(S1 / math.log(2.0)), atol=1e-12
        )
        assert np.all(S1 >= 0)
        _, S3 = entropy_chain_clifford(8, 0.5, 7, 1, proto, ls)
        assert not np.array_equal(S1, S3)

    def test_gaussian_chain_deterministic(self):
        proto = SteadyStateProtocol(L=8, n_snapshots=2)
        ls = [2, 4, 6]
        rows1, S1 = entropy_chain_gaussian(8, 0.12 * math.pi, 3, 0, proto, ls,
                                           renyi_ns=(1, 2))
        rows2, S2 = entropy_chain_gaussian(8, 0.12 * math.pi, 3, 0, proto, ls,
                                           renyi_ns=(1, 2))
        np.testing.assert_array_equal(S1, S2)
        assert S1.shape == (2, 2, 3)
        assert np.all(np.isfinite(S1)) and np.all(S1 > -1e-12)
        # Renyi-2 never exceeds von Neumann
        assert np.all(S1[:, 1] <= S1[:, 0] + 1e-12)

    def test_gaussian_chain_rejects_endpoints(self):
        proto = SteadyStateProtocol(L=4, n_snapshots=1)
        with pytest.raises(ValueError):
            entropy_chain_gaussian(4, math.pi / 4, 0, 0, proto, [2])
        with pytest.raises(ValueError):
            entropy_chain_gaussian(4, 0.0, 0, 0, proto, [2])


class TestCoherentInfo:
    def test_exact_matches_mps(self):
        for idx in range(4):
            C1, I1 = coherent_info_sample("exact", 4, 0.1 * math.pi, 0.8, 11, idx)
            C2, I2 = coherent_info_sample("mps", 4, 0.1 * math.pi, 0.8, 11, idx)
            assert abs(C1 - C2) < 1e-8
            assert abs(I1 - I2) < 1e-8

    def test_clifford_at_projective_point(self):
        vals = [
            coherent_info_sample("clifford", 6, math.pi / 4, 0.5, 13, i)[0]
            for i in range(10)
        ]
        assert all(v in (-1.0, 0.0, 1.0) for v in vals)

    def test_info_from_correlator(self):
        C, I = coherent_info_sample("exact", 3, 0.12 * math.pi, 0.9, 5, 0)
        from nishiperc.observables import binary_entropy_bits

        assert abs(I - binary_entropy_bits(0.5 * (1.0 + C))) < 1e-12

    def test_deterministic_in_index(self):
        a = coherent_info_sample("exact", 3, 0.1 * math.pi, 0.7, 2, 5)
        b = coherent_info_sample("exact", 3, 0.1 * math.pi, 0.7, 2, 5)
        assert a == b

    def test_bad_backend(self):
        with pytest.raises(ValueError):
            coherent_info_sample("gaussian", 4, 0.1, 0.8, 0, 0)


class TestFreeEnergy:
    def test_backends_agree(self):
        spec = LatticeSpec(4, 5)
        for idx in range(3):
            fe = free_energy_sample("exact", spec, 0.1 * math.pi, 0.7, 9, idx)
            fg = free_energy_sample("gaussian", spec, 0.1 * math.pi, 0.7, 9, idx)
            fm = free_energy_sample("mps", spec, 0.1 * math.pi, 0.7, 9, idx)
            assert abs(fe - fg) < 1e-8
            assert abs(fe - fm) < 1e-7

    def test_post_selected_ignores_index(self):
        spec = LatticeSpec(4, 5)
        a = free_energy_sample("gaussian", spec, 0.1 * math.pi, 1.0, 0, 0,
                               post_selected=True)
        b = free_energy_sample("gaussian", spec, 0.1 * math.pi, 1.0, 1, 9,
                               post_selected=True)
        assert a == b


class TestCleanProfile:
    def test_open_stripe_profile(self):
        ls = [2, 4, 6]
        S = clean_entropy_profile_mps(8, 0.1 * math.pi, ls, depth=16)
        assert S.shape == (1, 3)
        assert np.all(S > 0)
        # open-boundary half-chain is the largest of the three cuts
        assert S[0, 1] >= S[0, 0] and S[0, 1] >= S[0, 2] - 1e-9


class TestCampaignHelpers:
    def test_entropy_campaign_worker_invariance(self):
        ls = [2, 4, 6]
        kw = dict(backend="clifford", L=8, t=math.pi / 4, p_meas=0.5, seed=4,
                  n_chains=4, snapshots_per_chain=3, ls=ls, n_blocks=4)
        a = entropy_campaign(workers=1, **kw)
        b = entropy_campaign(workers=3, **kw)
        np.testing.assert_array_equal(
            a.pooled().k_statistics(2), b.pooled().k_statistics(2)
        )
        assert a.pooled().count == 12
        k = a.pooled().k_statistics(2)
        assert k.shape == (2, 1, 3)
        assert np.all(k[1] >= -1e-12)

    def test_coherent_campaign(self):
        m1, s1 = coherent_info_campaign("clifford", 6, math.pi / 4, 0.5, 1, 12,
                                        workers=1)
        m2, _ = coherent_info_campaign("clifford", 6, math.pi / 4, 0.5, 1, 12,
                                       workers=3)
        assert m1 == m2
        assert 0.0 <= m1 <= 1.0 and s1 >= 0.0


class TestBackendAuto:
    def test_rules(self):
        assert pick_backend(math.pi / 4, 0.5, 128, "entropy") == "clifford"
        assert pick_backend(0.1, 0.8, 10, "entropy") == "exact"
        assert pick_backend(0.1, 0.8, 64, "coherent-info") == "mps"
        assert pick_backend(0.1, 1.0, 64, "entropy") == "gaussian"
