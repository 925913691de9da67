import math

import pytest

from pfaffian_cqed.errors import ParameterError
from pfaffian_cqed.lattice import LatticeSpec
from pfaffian_cqed.qubit import EffectiveModel
from pfaffian_cqed.sweeps import (
    OrderCell,
    SweepPlan,
    feasibility_report,
    monotonic_trends,
    order_cell,
    run_fig4b,
)

SMALL = LatticeSpec(Lx=4, Ly=2, alpha=0.25, N=2, scheme="NNN")


def test_plan_validation():
    SweepPlan("fig4b_order", axes={"U2": [0.0, 1.0]})
    with pytest.raises(ParameterError):
        SweepPlan("fig5")
    with pytest.raises(ParameterError):
        SweepPlan("fig4b_order", axes={"U2": []})


def test_order_cell_uses_soft_three_body():
    cell = order_cell((0, SMALL, 0.0, 50.0, 1, 1e-10))
    assert cell.U3 == 50.0 and len(cell.eigenvalues) == 4


def test_fig4b_order_and_worker_independence():
    a = run_fig4b([0.0, 1.0], [5.0, 50.0], SMALL, workers=1)
    b = run_fig4b([0.0, 1.0], [5.0, 50.0], SMALL, workers=2)
    assert [(c.U2, c.U3) for c in a] == [(0.0, 5.0), (0.0, 50.0), (1.0, 5.0), (1.0, 50.0)]
    assert [c.lambda_order for c in a] == [c.lambda_order for c in b]


def test_fig4b_rejects_empty_grid():
    with pytest.raises(ParameterError):
        run_fig4b([], [1.0], SMALL)


def _cell(i, u2, u3, lam):
    return OrderCell(i, u2, u3, lam, 0.0, 0.0, [])


def test_monotonic_trends():
    cells = [_cell(0, 0.0, 1.0, 2.0), _cell(1, 0.0, 10.0, 3.0),
             _cell(2, 1.0, 1.0, 1.0), _cell(3, 1.0, 10.0, 2.5)]
    t = monotonic_trends(cells)
    assert t["decreasing_in_U2"] and t["increasing_in_U3"]
    cells[3] = _cell(3, 1.0, 10.0, 3.5)
    assert not monotonic_trends(cells)["decreasing_in_U2"]


def test_feasibility_thresholds():
    model = EffectiveModel(omega0=0.586, U2=0.0, U3=0.0172521)
    rows = feasibility_report(model, J_MHz=10.0, EJ_GHz=(10.0, 40.0))
    assert rows[0].U3_MHz == pytest.approx(172.521)
    assert not rows[0].feasible
    assert rows[1].ratio == pytest.approx(69.0084)
    assert rows[1].feasible and rows[1].few_hundred_MHz


def test_feasibility_zero_coupling():
    rows = feasibility_report(EffectiveModel(0.5, 0.0, 0.01), J_MHz=0.0, EJ_GHz=(20.0,))
    assert math.isinf(rows[0].ratio)
    assert not rows[0].J_ok and not rows[0].feasible
