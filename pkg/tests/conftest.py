import pytest

from egonav.simulator import SynthSegment, SynthSpec, synthesize


def two_zone_spec(seed, fps=30.0, noise_std=0.002):
    """Walk with two pause-and-manipulate zones, >= 60 s total."""
    return SynthSpec(segments=(
        SynthSegment("pause-and-manipulate", 14.0),
        SynthSegment("straight", 6.0, speed=1.0),
        SynthSegment("arc", 3.0, speed=1.0, turn_rate=0.7),
        SynthSegment("straight", 6.0, speed=1.0),
        SynthSegment("pause-and-manipulate", 14.0),
        SynthSegment("straight", 6.0, speed=1.0),
        SynthSegment("arc", 3.0, speed=1.0, turn_rate=-0.7),
        SynthSegment("straight", 9.0, speed=1.0),
    ), fps=fps, noise_std=noise_std, seed=seed)


@pytest.fixture
def two_zone_episode():
    return synthesize(two_zone_spec(seed=42))
