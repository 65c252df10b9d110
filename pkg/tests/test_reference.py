from emgmex.model import CHANNEL_IDS
from emgmex.reference import (
    AU_VOCABULARY,
    AUS_BY_CHANNEL,
    EMOTION_PATTERNS,
    EMOTIONS,
    channels_for_au,
)


def test_every_channel_has_aus():
    assert set(AUS_BY_CHANNEL) == set(CHANNEL_IDS)
    assert all(aus for aus in AUS_BY_CHANNEL.values())


def test_emotion_patterns_reference_known_symbols():
    for emotion, pattern in EMOTION_PATTERNS.items():
        assert emotion in EMOTIONS
        assert set(pattern["channels"]) <= set(CHANNEL_IDS)
        for au in pattern["aus"]:
            assert au.startswith("AU")


def test_channels_for_au_inverts_table():
    assert channels_for_au("AU12") == ("c5",)
    assert set(channels_for_au("AU4")) == {"c2", "c3"}
    assert channels_for_au("AU99") == ()


def test_vocabulary_sorted_and_unique():
    assert len(AU_VOCABULARY) == len(set(AU_VOCABULARY))
    numbers = [int(au[2:]) for au in AU_VOCABULARY]
    assert numbers == sorted(numbers)
