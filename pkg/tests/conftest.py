import pytest
from hypothesis import HealthCheck, settings

from platoonlink.model import HighwayScene, PlatoonSpec, QueueSpec, RadioSpec
from platoonlink.scenario import dbm_to_watts
from platoonlink.sinr import SinrModel

settings.register_profile(
    "package", deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("package")


@pytest.fixture
def table1_spec():
    """Baseline platoon: 6 followers, gains a=b=2, 30 m/s free flow,
    35 m / 5 m map knees, 20 m / 15 m/s targets."""
    return PlatoonSpec(follower_count=6, target_spacing=20.0,
                       target_velocity=15.0, gain_a=2.0, gain_b=2.0,
                       v_max=30.0, d_sparse=35.0, d_dense=5.0)


@pytest.fixture
def table1_queue():
    return QueueSpec(arrival_rate=10.0, processor_rate=10_000.0)


def make_scene(spacing, followers=6, densities=(0.01, 0.005, 0.005, 0.0),
               ahead=0.01, behind=0.01, segment=10_000.0):
    """Four-lane scene with the tagged link at the platoon midpoint."""
    mid = max(1, round(followers / 2))
    return HighwayScene(lane_count=4, lane_width=3.7, platoon_lane=4,
                        lane_densities=densities, ahead_density=ahead,
                        behind_density=behind, dist_to_head=mid * spacing,
                        dist_to_tail=(followers - mid) * spacing,
                        segment_length=segment)


def make_radio(spacing, packet_bits=3200.0, bandwidth=40e6, beta=3,
               alpha=3.0):
    return RadioSpec(tx_power=dbm_to_watts(27.0), pathloss_alpha=alpha,
                     nakagami_beta=beta, total_bandwidth=bandwidth,
                     noise_psd=dbm_to_watts(-174.0), packet_size=packet_bits,
                     link_distance=spacing)


def make_model(spacing, followers=6, **radio_kwargs):
    """SinrModel for the validation scene at the given spacing."""
    return SinrModel(scene=make_scene(spacing, followers=followers),
                     radio=make_radio(spacing, **radio_kwargs),
                     follower_count=followers)
