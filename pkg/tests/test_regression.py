"""Regression baselines recorded from the first verified run.

Regenerate with ``python tests/test_regression.py`` after an intentional change.
"""
import json
import sys
from pathlib import Path

import numpy as np
import pytest

from pfaffian_cqed.dynamics import CoupledSpec, bosonic_reference, compare_traces, evolve, j_eff, reference_U2
from pfaffian_cqed.qubit import QubitParams, find_zero_U2
from pfaffian_cqed.sweeps import reference_lattice, run_fig4a

BASELINE = Path(__file__).parent / "data" / "baselines.json"


def measure() -> dict:
    root = find_zero_U2(0.05, 1.4)
    q = QubitParams(0.05, 1.4, root.phi_x)
    spec = CoupledSpec(q, q)
    trace = evolve(spec, (1, 1))
    ref = bosonic_reference(j_eff(spec), reference_U2(spec), (1, 1), trace.times)
    spectra = run_fig4a(reference_lattice())
    return {
        "phi_x": root.phi_x,
        "omega0": root.model.omega0,
        "U3": root.model.U3,
        "J_eff": j_eff(spec),
        "bosonic_deviation": compare_traces(trace, ref, labels=ref.labels).overall_max,
        "spectra": {k: [float(e) for e in r.eigenvalues] for k, r in spectra.items()},
    }


@pytest.fixture(scope="module")
def current():
    return measure()


@pytest.fixture(scope="module")
def baseline():
    return json.loads(BASELINE.read_text())


@pytest.mark.parametrize("key", ["phi_x", "omega0", "U3", "J_eff"])
def test_qubit_scalars(current, baseline, key):
    assert current[key] == pytest.approx(baseline[key], rel=1e-8)


def test_bosonic_deviation(current, baseline):
    assert current["bosonic_deviation"] == pytest.approx(baseline["bosonic_deviation"], rel=1e-6)


@pytest.mark.parametrize("scheme", ["NN", "NNN", "long-range"])
def test_spectra(current, baseline, scheme):
    assert np.allclose(current["spectra"][scheme], baseline["spectra"][scheme], atol=1e-8)


if __name__ == "__main__":
    BASELINE.parent.mkdir(exist_ok=True)
    BASELINE.write_text(json.dumps(measure(), indent=2) + "\n")
    sys.exit(0)
