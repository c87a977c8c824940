import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lcris.config import assemble_scenario_channels
from lcris.geometry import ChannelSet, build_upa, steering_vector, wavenumber
from lcris.lc_model import LCCellModel, transition_times
from lcris.optimizer import (InfeasibleError, SnrKernel, area_focusing, assign_points,
                             benchmark_optimize, build_kernels, build_snr_kernel,
                             coordinate_cost, cycle_cost, focusing_phases, line_search,
                             line_search_element, line_search_grid, mf_beamformer, min_area_snr,
                             optimize, wrap_phase)

CELL = LCCellModel()
K28 = wavenumber(28e9)


def _random_kernel(rng, n_points, N):
    G = rng.normal(size=(n_points, N)) + 1j * rng.normal(size=(n_points, N))
    return SnrKernel(G)


class TestBeamformer:
    def test_power_normalisation(self, channels, scenario):
        q = mf_beamformer(channels, scenario.rf.P_t)
        assert np.vdot(q, q).real == pytest.approx(scenario.rf.P_t, rel=1e-14)

    def test_single_antenna(self, channels):
        bs = build_upa(1, 1, 0.01, (40.0, 20.0, 5.0), "XZ")
        ch = dataclasses.replace(channels, bs=bs)
        q = mf_beamformer(ch, 4.0)
        assert q.shape == (1,) and abs(q[0]) == pytest.approx(2.0)

    def test_coherent_gain_is_maximal(self, channels, rng):
        P_t = 2.0
        a = steering_vector(channels.bs, channels.ris.center, channels.wavenumber)
        q = mf_beamformer(channels, P_t)
        best = abs(a @ q)
        assert best == pytest.approx(math.sqrt(P_t) * np.linalg.norm(a))
        x = rng.normal(size=(2000, a.size)) + 1j * rng.normal(size=(2000, a.size))
        x *= math.sqrt(P_t) / np.linalg.norm(x, axis=1, keepdims=True)
        assert np.abs(x @ a).max() <= best * (1 + 1e-12)


class TestKernel:
    def test_single_element_ignores_phase(self, rng):
        k = _random_kernel(rng, 1, 1)
        vals = [k.snr([w])[0] for w in np.linspace(0, 6, 7)]
        np.testing.assert_allclose(vals, abs(k.G[0, 0]) ** 2)

    def test_focusing_reaches_coherent_maximum(self, kernels):
        g = kernels[0].G[3]
        v = focusing_phases(g, CELL).phases
        assert kernels[0].snr(v)[3] == pytest.approx(np.abs(g).sum() ** 2, rel=1e-10)

    def test_global_phase_invariance(self, kernels, rng):
        v = rng.uniform(0, 2 * np.pi, kernels[1].G.shape[1])
        np.testing.assert_allclose(kernels[1].snr(v + 0.7), kernels[1].snr(v), rtol=1e-10)

    def test_matrix_form(self, rng):
        k = _random_kernel(rng, 2, 5)
        v = np.exp(1j * rng.uniform(0, 6, 5))
        M = k.matrix(1)
        np.testing.assert_allclose(M, M.conj().T)
        assert np.vdot(v, M @ v).real == pytest.approx(k.snr(np.angle(v))[1])

    def test_direct_term_only_on_request(self, channels, scenario):
        q = mf_beamformer(channels, scenario.rf.P_t)
        assert build_snr_kernel(channels, 0, q).d is None
        assert build_snr_kernel(channels, 0, q, include_direct=True).d.shape == (9,)


class TestFocusing:
    def test_aligned_arguments(self, rng):
        g = rng.normal(size=64) + 1j * rng.normal(size=64)
        w = focusing_phases(g, CELL).phases
        ang = np.angle(g * np.exp(1j * w))
        np.testing.assert_allclose(ang, 0.0, atol=1e-9)
        assert w.min() >= 0 and w.max() < 2 * np.pi

    def test_dominates_random_configurations(self, kernels, rng):
        k = kernels[2]
        best = k.snr(focusing_phases(k.G[0], CELL).phases)[0]
        rand = [k.snr(rng.uniform(0, 2 * np.pi, k.G.shape[1]))[0] for _ in range(100)]
        assert best >= max(rand)

    def test_single_element_alignment(self):
        w = focusing_phases(np.array([np.exp(1j * 0.4)]), CELL).phases
        assert w[0] == pytest.approx(2 * np.pi - 0.4)

    def test_wrap_extended_range(self):
        big = CELL.with_omega_max(4 * np.pi)
        w = wrap_phase([-0.5, 7.0, 13.0], big)
        assert np.all((w >= 0) & (w < 2 * np.pi))


class TestMinAreaSnr:
    def test_singleton(self, rng):
        k = _random_kernel(rng, 1, 8)
        v = rng.uniform(0, 6, 8)
        assert min_area_snr(v, k) == (pytest.approx(k.snr(v)[0]), 0)

    def test_center_focus_minimum_on_boundary(self, kernels):
        center = 4  # middle of the 3 x 3 lattice
        for k in kernels:
            _, idx = min_area_snr(focusing_phases(k.G[center], CELL), k)
            assert idx != center

    def test_global_phase(self, kernels, rng):
        v = rng.uniform(0, 6, kernels[0].G.shape[1])
        a, b = min_area_snr(v, kernels[0]), min_area_snr(v + 1.3, kernels[0])
        assert a[1] == b[1] and a[0] == pytest.approx(b[0], rel=1e-10)

    def test_ties_go_to_lowest_index(self):
        k = SnrKernel(np.ones((3, 2), complex))
        assert min_area_snr([0.0, 0.0], k)[1] == 0


class TestAssignment:
    def test_single_point(self):
        assert not assign_points(7, 1).any()

    def test_bijection(self):
        np.testing.assert_array_equal(assign_points(9, 9), np.arange(9))

    def test_counts(self):
        assert np.bincount(assign_points(10, 4)).tolist() == [3, 3, 2, 2]

    @given(st.integers(1, 500), st.integers(1, 40))
    def test_balanced(self, N, U):
        c = np.bincount(assign_points(N, U), minlength=U)
        assert set(c) <= {N // U, -(-N // U)}

    def test_empty_area(self):
        with pytest.raises(ValueError):
            assign_points(4, 0)


ctx = st.tuples(st.floats(0.05, 6.2), st.floats(0.05, 6.2), st.floats(0.0, 6.28))


class TestSurrogate:
    @given(ctx, st.floats(0.01, 5.0))
    def test_pure_cosine_minimiser(self, c, lam):
        prev, nxt, phi = c
        w = line_search_element(prev, nxt, lam, 0.0, 0.0, phi, CELL, 256)
        step = 2 * np.pi / 257
        d = abs((w - phi + np.pi) % (2 * np.pi) - np.pi)
        assert d <= step * (1 + 1e-9)

    @given(st.floats(0.05, 6.2), st.floats(0.05, 6.2))
    def test_time_only_minimiser_between_neighbours(self, prev, nxt):
        grid = np.linspace(1e-4, 2 * np.pi - 1e-4, 10_000)
        cost = coordinate_cost(grid, prev, nxt, 0.0, 1.0, 1.0, 0.0, CELL)
        w = grid[np.argmin(cost)]
        lo, hi = sorted((prev, nxt))
        assert lo - 1e-3 <= w <= hi + 1e-3

    def test_coincident_neighbours(self):
        assert coordinate_cost(1.0, 1.0, 1.0, 0.4, 1.0, 1.0, 0.3, CELL) == pytest.approx(
            -0.4 * math.cos(0.7))

    def test_cost_formula(self):
        got = coordinate_cost(2.0, 1.0, 0.5, 0.3, 1.0, 1.0, 0.2, CELL)
        expect = (transition_times(1.0, 2.0, CELL) + transition_times(2.0, 0.5, CELL)
                  - 0.3 * math.cos(1.8))
        assert got == pytest.approx(float(expect))

    def test_vector_search_equals_brute_force(self, rng):
        n, L = 200, 64
        prev, nxt, phi = (rng.uniform(0.1, 6.1, n) for _ in range(3))
        lam = rng.uniform(0.0, 0.3, n)
        xp, xn = rng.integers(0, 2, n).astype(float), rng.integers(0, 2, n).astype(float)
        got = line_search(prev, nxt, lam, xp, xn, phi, CELL, L)
        grid = line_search_grid(CELL, L)
        for i in range(n):
            c = coordinate_cost(grid, prev[i], nxt[i], lam[i], xp[i], xn[i], phi[i], CELL)
            assert got[i] == grid[np.flatnonzero(c == c.min())[0]] or (
                coordinate_cost(got[i], prev[i], nxt[i], lam[i], xp[i], xn[i], phi[i], CELL)
                == c.min())

    def test_grid_refinement(self, rng):
        n = 500
        prev, nxt, phi = (rng.uniform(0.1, 6.1, n) for _ in range(3))
        lam = rng.uniform(0.01, 0.3, n)
        ones = np.ones(n)
        coarse = line_search(prev, nxt, lam, ones, ones, phi, CELL, 256)
        fine = line_search(prev, nxt, lam, ones, ones, phi, CELL, 4096)
        step = 2 * np.pi / 257
        assert np.mean(np.abs(coarse - fine) <= step + 1e-12) >= 0.99

    def test_grid_excludes_endpoints(self):
        g = line_search_grid(CELL, 4)
        assert g[0] > 0 and g[-1] < 2 * np.pi and len(g) == 4
        with pytest.raises(ValueError):
            line_search_grid(CELL, 1)


def _small_problem(rng, K=2, N=12, U=1):
    return [_random_kernel(rng, U, N) for _ in range(K)]


class TestOptimize:
    def test_self_cycle_has_zero_cost(self, rng):
        rep = optimize(_small_problem(rng, K=1), CELL, 1e-3, I_max=5)
        np.testing.assert_array_equal(rep.costs, 0.0)

    def test_infeasible_start_names_user_and_point(self, rng):
        ks = _small_problem(rng, K=2, N=4, U=3)
        with pytest.raises(InfeasibleError) as exc:
            optimize(ks, CELL, 1e6)
        assert exc.value.user == 0 and 0 <= exc.value.point < 3

    def test_bad_order(self, rng):
        with pytest.raises(ValueError):
            optimize(_small_problem(rng), CELL, 1e-3, order=(0, 0))

    def test_report_invariants_and_lambda_discipline(self, rng):
        ks = _small_problem(rng, K=3, N=40, U=2)
        thr = 0.8 * min(min_area_snr(area_focusing(k, CELL), k)[0] for k in ks)
        rep = optimize(ks, CELL, thr, I_max=20, lambda0=0.05)
        assert rep.check_invariants() == []
        for u in range(3):
            st_ = [row["status"][u] for row in rep.trace[1:]]
            n_acc, n_rej = st_.count("accept"), st_.count("reject")
            assert n_acc + n_rej == 20
            np.testing.assert_allclose(rep.lambdas[u], 0.05 * 0.95 ** (n_acc - n_rej), rtol=1e-12)
        assert len(rep.trace) == 21

    def test_deterministic(self, rng):
        ks = _small_problem(rng, K=3, N=30, U=2)
        thr = 0.5 * min(min_area_snr(area_focusing(k, CELL), k)[0] for k in ks)
        a, b = optimize(ks, CELL, thr, I_max=8), optimize(ks, CELL, thr, I_max=8)
        assert a.to_dict() == b.to_dict()

    def test_order_maps_back_to_user_ids(self, kernels, scenario, optimized):
        rep = optimized[(0, 2, 1)]
        W = np.array([rep.configs[u].phases for u in rep.order])
        assert cycle_cost(W, CELL) == pytest.approx(rep.final_cost)
        for u in range(3):
            snr, _ = min_area_snr(rep.configs[u], kernels[u])
            assert 10 * np.log10(snr) >= scenario.rf.gamma_thr_dB

    def test_baseline_runs_clean(self, optimized):
        for rep in optimized.values():
            assert rep.check_invariants() == []
            assert rep.final_cost < rep.initial_cost

    def test_extended_range_search_uses_it(self, kernels, scenario):
        big = scenario.lc.with_omega_max(4 * np.pi)
        rep = optimize(kernels, big, scenario.rf.gamma_thr, I_max=5)
        assert max(c.phases.max() for c in rep.configs) > 2 * np.pi


class TestBenchmark:
    def test_singleton_area_is_point_focusing(self, rng):
        ks = _small_problem(rng, K=2, N=9, U=1)
        for k, c in zip(ks, benchmark_optimize(ks, CELL)):
            np.testing.assert_allclose(c.phases, focusing_phases(k.G[0], CELL).phases)

    def test_benchmark_snr_not_below_proposed(self, kernels, benchmark, optimized):
        rep = optimized[(0, 1, 2)]
        for u, k in enumerate(kernels):
            assert min_area_snr(benchmark[u], k)[0] >= min_area_snr(rep.configs[u], k)[0]

    def test_order_independent(self, kernels):
        a = benchmark_optimize(kernels, CELL)
        b = benchmark_optimize(kernels[::-1], CELL)[::-1]
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.phases, y.phases)
