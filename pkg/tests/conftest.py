import numpy as np
import pytest

from emgmex.model import ChannelTrace, EmgRecording


@pytest.fixture
def make_recording():
    """Factory for recordings built from plain per-channel arrays."""

    def build(samples_by_channel, sample_rate_hz=1000, domain="raw", rec_id="rec",
              mvc=None):
        channels = tuple(
            ChannelTrace(channel_id=cid, samples=np.asarray(samples, dtype=float))
            for cid, samples in samples_by_channel.items()
        )
        return EmgRecording(
            id=rec_id,
            sample_rate_hz=sample_rate_hz,
            channels=channels,
            mvc=mvc,
            domain=domain,
        )

    return build
