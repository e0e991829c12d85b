"""scikit-learn style wrappers.

``TwoTierAlohaSimulator`` exposes the common scenario knobs as estimator
parameters, so ``get_params``/``set_params``/``clone`` and
``ParameterGrid`` work on it. ``AdaptiveMSelector`` learns the (SF, p_a) -> M
lookup table from sweep results and predicts M for new operating points.
"""

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .engine import run_simulation
from .scenario import Scenario, with_axis_value
from .sweep import MissingAxisError, build_adaptive_m_table
from .units import db_to_linear


class TwoTierAlohaSimulator(BaseEstimator):
    """Monte Carlo estimate of throughput per RF slot.

    Parameters left as ``None`` keep the value from ``scenario`` (or the
    defaults when no scenario is given). ``fit`` runs the simulation and
    stores ``stats_`` and ``scenario_``; ``score`` returns the mean throughput.
    """

    def __init__(self, scenario=None, num_cells=None, users_per_cell=None,
                 activation_prob=None, multirate_factor=None, sf=None,
                 semi_angle_deg=None, cell_radius_m=None, capture_threshold_db=None,
                 num_owc_slots=None, replications=None, master_seed=None):
        self.scenario = scenario
        self.num_cells = num_cells
        self.users_per_cell = users_per_cell
        self.activation_prob = activation_prob
        self.multirate_factor = multirate_factor
        self.sf = sf
        self.semi_angle_deg = semi_angle_deg
        self.cell_radius_m = cell_radius_m
        self.capture_threshold_db = capture_threshold_db
        self.num_owc_slots = num_owc_slots
        self.replications = replications
        self.master_seed = master_seed

    def build_scenario(self):
        s = Scenario() if self.scenario is None else self.scenario
        top = {k: getattr(self, k) for k in ("num_cells", "users_per_cell", "activation_prob",
                                             "multirate_factor", "num_owc_slots",
                                             "replications", "master_seed")}
        s = dataclasses.replace(s, **{k: v for k, v in top.items() if v is not None})
        for axis, value in (("SF", self.sf), ("semi_angle_deg", self.semi_angle_deg),
                            ("cell_radius_m", self.cell_radius_m)):
            if value is not None:
                s = with_axis_value(s, axis, value)
        if self.capture_threshold_db is not None:
            radio = dataclasses.replace(
                s.owc_radio,
                capture_threshold_linear=float(db_to_linear(self.capture_threshold_db)))
            s = dataclasses.replace(s, owc_radio=radio)
        return s

    def fit(self, X=None, y=None):
        self.scenario_ = self.build_scenario()
        self.stats_ = run_simulation(self.scenario_)
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "stats_")
        return self.stats_.throughput_mean


class AdaptiveMSelector(BaseEstimator):
    """Pick the multi-rate factor M from (SF, p_a) via a learned lookup table.

    ``fit`` takes sweep result rows with ``M`` and ``p_a`` columns (``SF``
    optional). ``predict`` takes X with columns ``[SF, p_a]`` (or just
    ``[p_a]`` when the results had no SF axis) and returns the best M of the
    nearest swept p_a.
    """

    def fit(self, X, y=None):
        rows = list(X)
        if not rows or "p_a" not in rows[0]:
            raise MissingAxisError("results need a p_a column")
        extra = [c for c in rows[0] if c in ("semi_angle_deg", "cell_radius_m")]
        if extra:
            raise ValueError(f"filter results to one value of {extra} before fitting")
        table = build_adaptive_m_table(rows)
        self.has_sf_ = "SF" in rows[0]
        lut = {}
        for row in table.rows:
            key = dict(row.key)
            sf = key.get("SF") if self.has_sf_ else None
            lut.setdefault(sf, []).append((key["p_a"], row.best_M))
        self.lookup_ = {sf: (np.array([p for p, _ in sorted(v)]),
                             np.array([m for _, m in sorted(v)]))
                        for sf, v in lut.items()}
        self.table_ = table
        return self

    def predict(self, X):
        check_is_fitted(self, "lookup_")
        X = check_array(X, ensure_2d=True)
        ncol = 2 if self.has_sf_ else 1
        if X.shape[1] != ncol:
            raise ValueError(f"expected {ncol} column(s), got {X.shape[1]}")
        out = np.empty(X.shape[0], dtype=int)
        for i, row in enumerate(X):
            sf = int(row[0]) if self.has_sf_ else None
            if sf not in self.lookup_:
                raise ValueError(f"SF {sf} was not in the fitted results")
            p_grid, m_grid = self.lookup_[sf]
            out[i] = m_grid[np.argmin(np.abs(p_grid - row[-1]))]
        return out
