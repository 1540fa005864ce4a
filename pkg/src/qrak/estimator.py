"""scikit-learn style wrappers around the solver and the evaluator.

The optimizer does not learn from data, so ``fit`` takes a problem (an
instance or a path to a problem file) in place of ``X``.
"""

from __future__ import annotations

import os

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .evaluator import EvaluationPolicy, evaluate_point
from .harness import Harness
from .problem import parse_problem_file
from .problem.model import ProblemInstance
from .solver import SolveOptions, solve

__all__ = ["DirectSearchSolver", "ConstraintEvaluator"]


def _instance(problem):
    if isinstance(problem, ProblemInstance):
        return problem
    if isinstance(problem, (str, os.PathLike)):
        return parse_problem_file(problem)
    raise TypeError(f"expected a ProblemInstance or a path, got {type(problem).__name__}")


class DirectSearchSolver(BaseEstimator):
    """Coordinate-search solver with taxonomy-driven constraint handling.

    After ``fit``: ``x_`` (solution vector or None), ``fun_``, ``success_``
    and the full ``report_``.
    """

    def __init__(
        self,
        x0=None,
        delta0=1.0,
        delta_min=1e-6,
        max_evals=None,
        max_sims=None,
        seed=0,
        shuffle_poll=False,
        restoration=False,
        skip_sim_on_relaxable_apriori=False,
        run_dir=None,
    ):
        self.x0 = x0
        self.delta0 = delta0
        self.delta_min = delta_min
        self.max_evals = max_evals
        self.max_sims = max_sims
        self.seed = seed
        self.shuffle_poll = shuffle_poll
        self.restoration = restoration
        self.skip_sim_on_relaxable_apriori = skip_sim_on_relaxable_apriori
        self.run_dir = run_dir

    def fit(self, problem, y=None):
        instance = _instance(problem)
        options = SolveOptions(
            x0=None if self.x0 is None else tuple(float(v) for v in self.x0),
            delta0=self.delta0,
            delta_min=self.delta_min,
            max_evals=self.max_evals,
            max_sims=self.max_sims,
            seed=self.seed,
            shuffle_poll=self.shuffle_poll,
            restoration=self.restoration,
            skip_sim_on_relaxable_apriori=self.skip_sim_on_relaxable_apriori,
            run_dir=self.run_dir,
        )
        self.report_ = solve(instance, options)
        self.success_ = self.report_.success
        sol = self.report_.solution
        self.x_ = None if sol is None else np.asarray(sol.x, dtype=float)
        self.fun_ = self.report_.f
        self.n_features_in_ = instance.n
        return self


class ConstraintEvaluator(TransformerMixin, BaseEstimator):
    """Maps each row of ``X`` to ``[f, h, n_viol_nonquant, hidden_event, sim_calls_used]``."""

    columns = ("f", "h", "n_viol_nonquant", "hidden_event", "sim_calls_used")

    def __init__(self, skip_sim_on_relaxable_apriori=False, run_dir=None):
        self.skip_sim_on_relaxable_apriori = skip_sim_on_relaxable_apriori
        self.run_dir = run_dir

    def fit(self, problem, y=None):
        self.instance_ = _instance(problem)
        self.harness_ = Harness(self.run_dir)
        self.n_features_in_ = self.instance_.n
        return self

    def transform(self, X):
        check_is_fitted(self, "instance_")
        X = check_array(X, dtype=float, ensure_all_finite="allow-nan")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, problem has {self.n_features_in_} variables")
        policy = EvaluationPolicy(self.skip_sim_on_relaxable_apriori)
        out = np.empty((X.shape[0], len(self.columns)))
        for i, row in enumerate(X):
            e = evaluate_point(self.instance_, tuple(row), policy, self.harness_)
            out[i] = (e.f, e.h, e.n_viol_nonquant, float(e.hidden_event), e.sim_calls_used)
        return out

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self.columns, dtype=object)
