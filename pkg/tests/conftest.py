import os

import numpy as np
import pytest

from qdpanel.panel_data import CountyObs, CountyPanel, Quarter, quarter_range
from qdpanel.synth import simulate
from qdpanel.validation import calibrated_params, noise_free_params, random_benefit_paths

os.environ.setdefault("QDP_THREADS", "1")


def make_panel(county, start, urates, weeks=26, wage=None, gdp=None):
    qs = quarter_range(start, start.succ(len(urates) - 1))
    if isinstance(weeks, int):
        weeks = [weeks] * len(urates)
    return CountyPanel(county, {
        q: CountyObs(u, wage, w, gdp) for q, u, w in zip(qs, urates, weeks)
    })


@pytest.fixture(scope="session")
def noise_free_world():
    # exogenous benefit paths so every pair sees benefit gaps
    b = random_benefit_paths(np.random.default_rng(4), 6, 24)
    return simulate(noise_free_params(), n_states=6, counties_per_state=8,
                    pairs_per_border=3, T=24, seed=4, benefits=b)


@pytest.fixture(scope="session")
def noisy_world():
    return simulate(calibrated_params(), n_states=10, counties_per_state=12,
                    pairs_per_border=5, T=30, seed=8)


@pytest.fixture
def q0():
    return Quarter(2009, 1)
