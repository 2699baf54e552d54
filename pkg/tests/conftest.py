import io

import numpy as np
import pytest

from mlrsc.graph import MultiLayerNetwork, layer_from_edges, load_edge_list
from mlrsc.sbm import model_preset, sample_msbm


@pytest.fixture
def path_network():
    """Undirected path 0-1-2 as a one-layer network."""
    return load_edge_list(io.StringIO("1 0 1\n1 1 2\n"), n=3, L=1)


@pytest.fixture
def directed_edge():
    layer = layer_from_edges(2, [0], [1], [2.0])
    return MultiLayerNetwork(2, (layer,), directed=True)


@pytest.fixture(scope="session")
def model1_small():
    model = model_preset(1, 200, 10, 0.2)
    return model, sample_msbm(model, 7)


def dense_layers(network):
    return [layer.csr.toarray() for layer in network.layers]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA_LINES = []


@pytest.fixture
def report_criterion():
    """Print and collect one pass/fail line per acceptance criterion."""
    def report(number, ok, detail):
        line = f"[criterion {number}] {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _CRITERIA_LINES.append(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA_LINES, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
