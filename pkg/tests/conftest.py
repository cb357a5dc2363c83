import numpy as np
import pytest

from blpc.config import all_benchmark_configs
from blpc.modelio import generate_test_weights
from blpc.oracle import build_oracle_model
from blpc.srn import prepare_model

# one line per acceptance criterion, printed in the terminal summary so
# the verdicts survive output capture
acceptance_lines: list = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def stores():
    """One deterministic weight store per benchmark config, built once."""
    return {c.label(): generate_test_weights(7, c)
            for c in all_benchmark_configs()}


@pytest.fixture(scope="session")
def models(stores):
    """(store, prepared engine model, naive oracle model) per config.

    Table precompute for the wide-code configs is the expensive part;
    sharing across the session keeps the suite fast.
    """
    out = {}
    for c in all_benchmark_configs():
        store = stores[c.label()]
        out[c.label()] = (store, prepare_model(store),
                          build_oracle_model(store))
    return out


def random_state(config, rng, model_ncodes):
    """A physically plausible mid-synthesis state for step-level trials."""
    from blpc.srn import init_state

    st = init_state(config, seed=int(rng.integers(0, 2**31)))
    s = config.bunch_size
    st.gru_a_state[:] = rng.uniform(-0.9, 0.9, st.gru_a_state.size)
    st.gru_b_state[:] = rng.uniform(-0.9, 0.9, st.gru_b_state.size)
    st.last_samples[:] = rng.integers(0, model_ncodes, s)
    st.last_excitations[:] = rng.integers(0, model_ncodes, s)
    st.last_predictions[:] = rng.uniform(-20000, 20000, s).astype(np.float32)
    st.sample_history[:] = rng.uniform(-20000, 20000,
                                       st.sample_history.size)
    return st
