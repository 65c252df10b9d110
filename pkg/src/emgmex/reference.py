"""Reference coding tables: channel/AU/emotion correspondences.

Pure data for annotation front-ends and reports; no logic is built on it.
AU labels are opaque strings to the rest of the toolkit.
"""

from __future__ import annotations

# Action units whose activity each electrode channel can pick up.
AUS_BY_CHANNEL = {
    "c1": ("AU1", "AU2"),
    "c2": ("AU4",),
    "c3": ("AU5", "AU6", "AU7", "AU4", "AU41", "AU42", "AU43", "AU44", "AU45"),
    "c4": ("AU9", "AU10"),
    "c5": ("AU11", "AU12"),
    "c6": ("AU15", "AU16", "AU17", "AU18", "AU22", "AU23", "AU24", "AU28"),
    "c7": ("AU14", "AU25"),
}

# Coding vocabulary: six basic emotions plus a catch-all for ambiguous ones.
EMOTIONS = ("happiness", "sadness", "disgust", "anger", "fear", "surprise", "other")

# Typical AU combinations and carrying channels per emotion.
EMOTION_PATTERNS = {
    "happiness": {"aus": ("AU6", "AU12"), "channels": ("c3", "c5")},
    "sadness": {"aus": ("AU45", "AU15"), "channels": ("c3", "c7")},
    "fear": {"aus": ("AU4", "AU7"), "channels": ("c2", "c3")},
    "surprise": {"aus": ("AU2", "AU5"), "channels": ("c1", "c3")},
    "disgust": {"aus": ("AU4", "AU9", "AU17"), "channels": ("c2", "c4", "c6")},
    "anger": {"aus": ("AU4", "AU7"), "channels": ("c2", "c3")},
}

AU_VOCABULARY = tuple(sorted({au for aus in AUS_BY_CHANNEL.values() for au in aus},
                             key=lambda a: int(a[2:])))


def channels_for_au(au: str) -> tuple[str, ...]:
    """Channels whose electrodes cover the given action unit."""
    return tuple(cid for cid, aus in AUS_BY_CHANNEL.items() if au in aus)
