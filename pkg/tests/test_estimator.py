import numpy as np
import pytest
from sklearn.base import clone

from qrak.estimator import ConstraintEvaluator, DirectSearchSolver


def test_solver_fit(fixtures):
    est = DirectSearchSolver(x0=(1.0, 1.0)).fit(fixtures / "omega.qrak")
    assert est.success_
    np.testing.assert_allclose(est.x_, [0.0, 0.0], atol=1e-6)
    assert est.fun_ == pytest.approx(0.0, abs=1e-6)


def test_params_roundtrip():
    est = DirectSearchSolver(delta0=2.0, seed=5)
    params = est.get_params()
    assert params["delta0"] == 2.0 and params["seed"] == 5
    twin = clone(est).set_params(delta_min=1e-3)
    assert twin.get_params()["delta_min"] == 1e-3 and twin.seed == 5


def test_evaluator_transform(fixtures):
    ev = ConstraintEvaluator().fit(str(fixtures / "omega.qrak"))
    out = ev.transform([[1.0, 1.0], [-1.0, 0.0]])
    assert out.shape == (2, 5)
    assert out[0, 0] == 2.0 and np.isinf(out[1, 0])
    assert list(ev.get_feature_names_out()) == ["f", "h", "n_viol_nonquant", "hidden_event", "sim_calls_used"]


def test_evaluator_shape_check(fixtures):
    ev = ConstraintEvaluator().fit(fixtures / "omega.qrak")
    with pytest.raises(ValueError):
        ev.transform([[1.0, 2.0, 3.0]])


def test_bad_problem_type():
    with pytest.raises(TypeError):
        DirectSearchSolver().fit(42)
