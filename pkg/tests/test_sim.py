import math

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import make_model, make_radio, make_scene
from platoonlink.exceptions import CollisionError
from platoonlink.model import PlatoonSpec, QueueSpec, VehicleState
from platoonlink.sim import (EmpiricalDelay, FixedDelay, LeaderProfile,
                             SimScenario, UniformDelay, deterministic_service,
                             empirical_ccdf, empirical_reliability,
                             equilibrium_states, exponential_service,
                             perturbed_states, sample_sinr, simulate_platoon,
                             simulate_tandem_queue, sinr_service)
from platoonlink.sinr import SinrModel
from platoonlink.stability import build_dynamics


def spec6():
    return PlatoonSpec(follower_count=6, target_spacing=20.0,
                       target_velocity=15.0, gain_a=2.0, gain_b=2.0,
                       v_max=30.0, d_sparse=35.0, d_dense=5.0)


class TestPlatoonIntegration:
    def test_equilibrium_is_preserved(self):
        spec = spec6()
        sc = SimScenario(spec=spec, initial_states=equilibrium_states(spec),
                         delay_model=FixedDelay(0.0139),
                         leader_profile=LeaderProfile(15.0),
                         duration=5.0, time_step=1e-3, rng_seed=1)
        trace = simulate_platoon(sc)
        assert np.abs(trace.spacing_errors).max() < 1e-9
        assert np.abs(trace.velocity_errors).max() < 1e-9

    def test_deterministic_per_seed(self):
        spec = spec6()
        rng = np.random.default_rng(9)
        states = perturbed_states(spec, rng)
        def run():
            sc = SimScenario(spec=spec, initial_states=states,
                             delay_model=UniformDelay(0.0139),
                             leader_profile=LeaderProfile(15.0),
                             duration=2.0, time_step=1e-3, rng_seed=77)
            return simulate_platoon(sc)
        a, b = run(), run()
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.velocities, b.velocities)

    def test_step_halving_convergence(self):
        spec = spec6()
        states = perturbed_states(spec, np.random.default_rng(5))
        def run(dt):
            sc = SimScenario(spec=spec, initial_states=states,
                             delay_model=FixedDelay(0.0139),
                             leader_profile=LeaderProfile(15.0),
                             duration=20.0, time_step=dt, rng_seed=5)
            return simulate_platoon(sc)
        coarse, fine = run(1e-3), run(5e-4)
        assert np.abs(coarse.spacing_errors[-1] - fine.spacing_errors[-1]).max() < 1e-6
        assert np.abs(coarse.velocity_errors[-1] - fine.velocity_errors[-1]).max() < 1e-6

    def test_zero_delay_decay_matches_spectrum(self):
        # undelayed system matrix must be Hurwitz, and the simulated
        # error decay rate has to track its spectral abscissa
        spec = spec6()
        dyn = build_dynamics(spec)
        eigs = np.linalg.eigvals(dyn.m1 + sum(dyn.m2))
        abscissa = eigs.real.max()
        assert abscissa < 0.0

        states = perturbed_states(spec, np.random.default_rng(11))
        sc = SimScenario(spec=spec, initial_states=states,
                         delay_model=FixedDelay(0.0),
                         leader_profile=LeaderProfile(15.0),
                         duration=40.0, time_step=1e-3, rng_seed=11)
        trace = simulate_platoon(sc)
        def err_norm(t_idx):
            return math.hypot(np.linalg.norm(trace.spacing_errors[t_idx]),
                              np.linalg.norm(trace.velocity_errors[t_idx]))
        i20, i40 = 20_000, 40_000
        rate = math.log(err_norm(i40) / err_norm(i20)) / 20.0
        assert 2.5 * abscissa <= rate <= 0.4 * abscissa

    def test_collision_detected(self):
        spec = spec6()
        states = list(equilibrium_states(spec))
        # follower 1 closing at full speed on a stopped leader
        states[0] = VehicleState(position=states[0].position, velocity=0.0)
        states[1] = VehicleState(position=states[0].position - 3.0,
                                 velocity=30.0)
        sc = SimScenario(spec=spec, initial_states=tuple(states),
                         delay_model=FixedDelay(0.0139),
                         leader_profile=LeaderProfile(0.0),
                         duration=10.0, time_step=1e-3, rng_seed=1)
        with pytest.raises(CollisionError) as err:
            simulate_platoon(sc)
        assert err.value.follower == 1
        assert err.value.time > 0.0

    def test_time_step_guard(self):
        spec = spec6()
        with pytest.raises(ValueError):
            SimScenario(spec=spec, initial_states=equilibrium_states(spec),
                        delay_model=UniformDelay(0.0139),
                        leader_profile=LeaderProfile(15.0),
                        duration=1.0, time_step=5e-3, rng_seed=1)

    def test_leader_profile_exact_integration(self):
        profile = LeaderProfile(18.0, steps=((2.0, 21.0), (4.0, 15.0)))
        assert profile.velocity(1.0) == 18.0
        assert profile.velocity(2.0) == 21.0
        assert profile.velocity(5.0) == 15.0
        assert profile.position(2.0, 0.0) == pytest.approx(36.0)
        assert profile.position(4.0, 0.0) == pytest.approx(36.0 + 42.0)
        assert profile.position(6.0, 0.0) == pytest.approx(36.0 + 42.0 + 30.0)


class TestInterferenceSampler:
    def test_deterministic_per_seed(self):
        model = make_model(5.0)
        a = sample_sinr(model, 2_000, seed=5)
        b = sample_sinr(model, 2_000, seed=5)
        assert np.array_equal(a, b)

    def test_no_interference_gamma_closure(self):
        # all densities zero: the CCDF of sinr is the exact Gamma tail
        scene = make_scene(5.0, densities=(0.0, 0.0, 0.0, 0.0),
                           ahead=0.0, behind=0.0)
        model = SinrModel(scene=scene, radio=make_radio(5.0),
                          follower_count=6)
        samples = sample_sinr(model, 100_000, seed=3)
        beta = 3
        snr_scale = (model.radio.tx_power * model.radio.link_distance ** -3.0
                     / model.noise_power)
        for theta in (0.3 * snr_scale, snr_scale, 3.0 * snr_scale):
            emp = (samples > theta).mean()
            exact = stats.gamma.sf(theta / snr_scale * beta, beta)
            se = math.sqrt(max(exact * (1 - exact), 1e-12) / samples.size)
            assert abs(emp - exact) <= 4.0 * se + 1e-4

    def test_ppp_intensity_calibration_campbell(self):
        # mean interference from the sampler must match Campbell's
        # formula, which pins counts, placement, and fading jointly
        model = make_model(5.0)
        samples = sample_sinr(model, 150_000, seed=21)
        # E[1/gamma] = (E[I] + sigma2) * E[1/g] * d^alpha / P with
        # E[1/g] = beta/(beta-1) for the unit-mean Gamma(beta) gain
        inv = 1.0 / samples
        est_mean_I = (inv.mean() * model.radio.tx_power
                      * model.radio.link_distance ** -3.0 / 1.5
                      - model.noise_power)
        se = (inv.std() / math.sqrt(inv.size) * model.radio.tx_power
              * model.radio.link_distance ** -3.0 / 1.5)

        scene = model.scene
        half = scene.segment_length / 2.0
        total = 0.0
        for c, lam in scene.interfering_lanes():
            val, _ = integrate.quad(
                lambda x: (x * x + c * c) ** -1.5, -half, half, limit=200)
            total += lam * val
        for d0, lam in ((scene.dist_to_head, scene.ahead_density),
                        (scene.dist_to_tail, scene.behind_density)):
            total += lam * (d0 ** -2 - half ** -2) / 2.0
        campbell = model.radio.tx_power * total
        assert abs(est_mean_I - campbell) <= 3.0 * se

    def test_empirical_ccdf_tracks_analytic(self):
        from platoonlink.sinr import sinr_ccdf
        model = make_model(5.0)
        samples = sample_sinr(model, 30_000, seed=12)
        grid = 10.0 ** (np.arange(-10.0, 26.0, 2.0) / 10.0)
        emp = empirical_ccdf(samples, grid)
        ana = np.array([sinr_ccdf(t, model) for t in grid])
        assert np.abs(emp - ana).max() <= 0.03


class TestTandemQueue:
    def test_light_traffic_limit(self):
        q = QueueSpec(arrival_rate=0.1, processor_rate=10_000.0)
        res = simulate_tandem_queue(q, deterministic_service(2e-3),
                                    n_packets=20_000, seed=3)
        expected = 1e-4 + 2e-3
        assert res.sojourn.mean() == pytest.approx(expected, rel=0.05)

    def test_mm1_stage_two_mean(self):
        q = QueueSpec(arrival_rate=600.0, processor_rate=10_000.0)
        res = simulate_tandem_queue(q, exponential_service(1_000.0),
                                    n_packets=400_000, seed=8)
        stage2 = res.sojourn - (res.q1_departures - res.arrivals)
        assert stage2.mean() == pytest.approx(1.0 / (1_000.0 - 600.0), rel=0.02)

    def test_unstable_flagged(self):
        q = QueueSpec(arrival_rate=900.0, processor_rate=10_000.0)
        res = simulate_tandem_queue(q, exponential_service(500.0),
                                    n_packets=5_000, seed=1)
        assert res.unstable

    def test_deterministic_per_seed(self):
        q = QueueSpec(arrival_rate=10.0, processor_rate=10_000.0)
        a = simulate_tandem_queue(q, exponential_service(100.0), 1_000, seed=5)
        b = simulate_tandem_queue(q, exponential_service(100.0), 1_000, seed=5)
        assert np.array_equal(a.sojourn, b.sojourn)

    def test_sinr_service_sampler_mean(self):
        model = make_model(5.0)
        rng = np.random.default_rng(4)
        draws = sinr_service(model)(rng, 100_000)
        from platoonlink.sinr import service_moments
        sm = service_moments(model)
        assert draws.mean() == pytest.approx(sm.mean, rel=0.08)


class TestEmpiricalReliability:
    def test_boundaries(self):
        samples = np.array([0.2, 0.5, 0.9])
        p, _ = empirical_reliability(samples, 0.1)
        assert p == 0.0
        p, _ = empirical_reliability(samples, 1.0)
        assert p == 1.0

    def test_half_width_scales(self):
        rng = np.random.default_rng(0)
        small = empirical_reliability(rng.uniform(0, 1, 100), 0.5)[1]
        large = empirical_reliability(rng.uniform(0, 1, 10_000), 0.5)[1]
        assert large < small

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            empirical_reliability(np.array([]), 0.5)

    def test_empirical_delay_model_resamples(self):
        model = EmpiricalDelay(samples=(1e-3, 2e-3, 3e-3))
        rng = np.random.default_rng(1)
        draws = model.sample(rng, 1_000)
        assert set(np.unique(draws)) <= {1e-3, 2e-3, 3e-3}
        assert model.upper == 3e-3
