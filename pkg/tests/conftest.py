import json

import pytest


@pytest.fixture
def spec_file(tmp_path):
    def write(obj, name="spec.json"):
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(path)

    return write


EULER = {"operator": {"builtin": "euler_ode", "params": {"a": [-0.25, 0, 1]}}, "weight": {"gamma": 0.3}}
RESONANT = {
    "operator": {"builtin": "euler_ode", "params": {"a": [-0.25, 0, 1]}},
    "weight": {"gamma": -0.25},
    "rhs": {"terms": [{"p_re": 2.5, "k": 0, "c": [1]}]},
    "depth": 0,
}
S1 = {"operator": {"builtin": "cone_laplacian_s1", "params": {"K": 3}}, "weight": {"gamma": 0.3}, "depth": 2}
COULOMB = {"operator": {"builtin": "coulomb_swave", "params": {"Z": 2.0}}, "weight": {"gamma": 0.0}, "depth": 3}
EDGE = {"operator": {"builtin": "edge_laplacian_r3", "params": {"K": 2}}, "weight": {"gamma": 0.3}, "edge": {"q": 1},
        "depth": 3}
EDGE_DRIFT = {
    "model": {"name": "point"},
    "operator": {"mu": 1},
    "weight": {"gamma": 0.2},
    "edge": {"q": 1, "coefficients": [{"j": 1, "matrix": 1}, {"j": 0, "matrix": -1, "beta": [1]},
                                     {"j": 0, "alpha": [1], "matrix": 1}],
             "y_grid": [-0.5, 0, 0.5]},
    "depth": 2,
}


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
