import json
import math

import pytest

import ergokit

HARMONIC = """
seed = 3
[model]
kind = "langevin"
d = 1
[potential]
kind = "quadratic"
coefficients = [0.5]
[constants]
gap = "analytic"
kato = "analytic"
[ensemble]
paths = 100
horizon = 1.0
checkpoints = [0.5, 1.0]
dt = 0.01
observables = ["omega1"]
"""


def test_langevin_rates_example():
    r = ergokit.langevin_rates(1.0, 1.0, 1.0, [1, 2, 0, 0])
    assert r["kappa1"] == pytest.approx(2.0, abs=1e-12)
    assert r["kappa2"] == pytest.approx(2 * math.sqrt(2) + math.sqrt(6) + 3 * math.sqrt(2), abs=1e-12)


def test_fiber_rates_example_and_errors():
    r = ergokit.fiber_rates(1.0, 2, 1.0, [0, 0])
    assert r["kappa1"] == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert r["kappa2"] == pytest.approx(2 * math.sqrt(2) + 2, abs=1e-12)
    with pytest.raises(ergokit.ConfigError, match="gap must be positive"):
        ergokit.fiber_rates(1.0, 2, 0.0, [0, 0])


def test_quadratic_gap():
    r = ergokit.quadratic_gap([0.5], levels=2)
    assert r["gap"] == pytest.approx(1.0, rel=1e-2)


def test_verify_and_outputs(tmp_path):
    r = ergokit.verify(HARMONIC, out=tmp_path)
    assert r["verdict"] == "pass"
    assert (tmp_path / "verify.csv").read_text().startswith("# ergokit verify ")
    assert json.loads((tmp_path / "verify.json").read_text())["verdict"] == "pass"


def test_schema_error():
    with pytest.raises(ergokit.ConfigError, match="missing \\[potential\\] block"):
        ergokit.constants('[model]\nkind = "langevin"\n')
