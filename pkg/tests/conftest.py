"""Shared strategies: every random object is built from a hypothesis-drawn seed."""
from __future__ import annotations

import numpy as np
from hypothesis import settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def rng_from(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
