import pytest

from platoonlink.exceptions import ScenarioError
from platoonlink.scenario import (apply_sweep_value, dbm_to_watts,
                                  default_scenario, parse_scenario)


class TestDefaults:
    def test_baseline_values(self):
        sc = default_scenario()
        assert sc.platoon.follower_count == 6
        assert sc.platoon.target_spacing == 20.0
        assert sc.platoon.target_velocity == 15.0
        assert sc.platoon.gain_a == 2.0 and sc.platoon.gain_b == 2.0
        assert sc.platoon.v_max == 30.0
        assert sc.platoon.d_sparse == 35.0 and sc.platoon.d_dense == 5.0
        assert sc.highway.lane_count == 4 and sc.highway.platoon_lane == 4
        assert sc.highway.lane_width == 3.7
        assert sc.highway.lane_densities == (0.01, 0.005, 0.005, 0.0)
        assert sc.highway.ahead_density == 0.01
        assert sc.highway.segment_length == 10_000.0
        assert sc.radio.tx_power == pytest.approx(0.501187, rel=1e-5)
        assert sc.radio.pathloss_alpha == 3.0
        assert sc.radio.nakagami_beta == 3
        assert sc.radio.total_bandwidth == 40e6
        assert sc.radio.noise_psd == pytest.approx(10.0 ** (-20.4), rel=1e-12)
        assert sc.radio.packet_size == 3200.0
        assert sc.queue.arrival_rate == 10.0
        assert sc.queue.processor_rate == 10_000.0

    def test_midpoint_link_defaults(self):
        sc = default_scenario()
        # third of six followers sits three spacings from head and tail
        assert sc.highway.dist_to_head == pytest.approx(60.0)
        assert sc.highway.dist_to_tail == pytest.approx(60.0)
        assert sc.radio.link_distance == pytest.approx(20.0)

    def test_dbm_conversion(self):
        assert dbm_to_watts(27.0) == pytest.approx(0.5011872336, rel=1e-9)
        assert dbm_to_watts(30.0) == pytest.approx(1.0)


class TestValidation:
    def test_unknown_section(self):
        with pytest.raises(ScenarioError, match="unknown section"):
            parse_scenario("[plutoon]\nfollowers = 6\n")

    def test_unknown_key(self):
        with pytest.raises(ScenarioError, match="unknown key"):
            parse_scenario("[platoon]\nfollower = 6\n")

    def test_toml_error_carries_location(self):
        with pytest.raises(ScenarioError, match="line"):
            parse_scenario("[platoon\nfollowers = 6\n")

    def test_domain_validation_wrapped(self):
        with pytest.raises(ScenarioError):
            parse_scenario("[platoon]\nfollowers = 0\n")
        with pytest.raises(ScenarioError):
            parse_scenario("[queue]\narrival_rate = 10.0\nprocessor_rate = 5.0\n")

    def test_bad_density_preset(self):
        with pytest.raises(ScenarioError, match="density_preset"):
            parse_scenario('[highway]\ndensity_preset = "medium"\n')

    def test_preset_requires_default_layout(self):
        with pytest.raises(ScenarioError, match="lane_densities"):
            parse_scenario("[highway]\nlanes = 3\nplatoon_lane = 2\n")


class TestOverrides:
    def test_high_density_preset(self):
        sc = parse_scenario('[highway]\ndensity_preset = "high"\n')
        assert sc.highway.lane_densities == (0.015, 0.01, 0.01, 0.0)
        assert sc.highway.ahead_density == 0.015

    def test_explicit_densities(self):
        text = ("[highway]\n"
                "lane_densities = [0.02, 0.0, 0.0, 0.0]\n"
                "ahead_density = 0.0\nbehind_density = 0.0\n")
        sc = parse_scenario(text)
        assert sc.highway.lane_densities == (0.02, 0.0, 0.0, 0.0)
        assert sc.highway.ahead_density == 0.0

    def test_spacing_propagates_to_derived_defaults(self):
        sc = parse_scenario("[platoon]\ntarget_spacing = 5.0\n")
        assert sc.radio.link_distance == 5.0
        assert sc.highway.dist_to_head == 15.0

    def test_explicit_link_distance_wins(self):
        sc = parse_scenario("[platoon]\ntarget_spacing = 5.0\n"
                            "[radio]\nlink_distance = 9.0\n")
        assert sc.radio.link_distance == 9.0

    def test_simulation_and_leader_steps(self):
        text = ("[simulation]\n"
                "duration = 60.0\n"
                'initial = "equilibrium"\n'
                "initial_velocity = 18.0\n"
                "leader_steps = [[20.0, 21.0], [40.0, 15.0]]\n")
        sc = parse_scenario(text)
        assert sc.simulation.initial == "equilibrium"
        assert sc.simulation.leader_steps == ((20.0, 21.0), (40.0, 15.0))


class TestSweep:
    def test_range_sweep(self):
        sc = parse_scenario('[sweep]\nparameter = "spacing"\n'
                            "start = 2.0\nstop = 6.0\nstep = 2.0\n")
        assert sc.sweep.values == (2.0, 4.0, 6.0)

    def test_values_sweep(self):
        sc = parse_scenario('[sweep]\nparameter = "bandwidth"\n'
                            "values = [1e6, 2e6]\n")
        assert sc.sweep.values == (1e6, 2e6)

    def test_gain_pair_sweep(self):
        sc = parse_scenario('[sweep]\nparameter = "gain_pair"\n'
                            "values = [[2.0, 2.0], [4.0, 2.0]]\n")
        assert sc.sweep.values == ((2.0, 2.0), (4.0, 2.0))

    def test_bad_parameter(self):
        with pytest.raises(ScenarioError, match="sweep parameter"):
            parse_scenario('[sweep]\nparameter = "speed"\nvalues = [1.0]\n')

    def test_missing_range(self):
        with pytest.raises(ScenarioError, match="start/stop/step"):
            parse_scenario('[sweep]\nparameter = "spacing"\nstart = 1.0\n')


class TestApplySweepValue:
    def test_spacing_override_rederives_defaults(self):
        sc = default_scenario()
        point = apply_sweep_value(sc, "spacing", 10.0)
        assert point.platoon.target_spacing == 10.0
        assert point.radio.link_distance == 10.0
        assert point.highway.dist_to_head == 30.0

    def test_density_scale(self):
        sc = default_scenario()
        point = apply_sweep_value(sc, "density_scale", 1.5)
        assert point.highway.lane_densities[0] == pytest.approx(0.015)
        assert point.highway.ahead_density == pytest.approx(0.015)

    def test_follower_count_changes_midpoint(self):
        sc = default_scenario()
        point = apply_sweep_value(sc, "follower_count", 8)
        assert point.platoon.follower_count == 8
        assert point.highway.dist_to_head == pytest.approx(80.0)

    def test_gain_pair(self):
        sc = default_scenario()
        point = apply_sweep_value(sc, "gain_pair", (4.0, 2.0))
        assert point.platoon.gain_a == 4.0 and point.platoon.gain_b == 2.0

    def test_explicit_values_survive_override(self):
        sc = parse_scenario("[radio]\nlink_distance = 9.0\n")
        point = apply_sweep_value(sc, "spacing", 10.0)
        assert point.radio.link_distance == 9.0
