"""scikit-learn style wrappers around the functional diagnostics.

``X`` is always a list of base points of the cocycle's system.  The
wrappers add parameter handling (``get_params``/``set_params``, cloning) and
fitted attributes with a trailing underscore; the numerics live in the
functional modules.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cocycle import DEFAULT_BLOCK
from .lyapunov import BACKWARD, FORWARD
from .regularity import ProbeConfig, probe_complete_regularity, probe_points
from .splitting import (
    DominationConfig,
    _domination_from_table,
    estimate_oseledets,
    estimate_sacker_sell,
    log_sv_table,
)
from .exceptions import InvalidParameter, SplittingUnresolved
from .validation import (
    check_cocycle,
    check_positive_int,
    check_sample,
    check_tolerance,
    resolve_schedule,
)


class FiniteTimeLyapunov(BaseEstimator, TransformerMixin):
    """Maps points to their finite-time spectra ``(1/n) log sigma_k(A(x, +-n))``."""

    def __init__(self, cocycle=None, n=4096, direction=FORWARD, block=DEFAULT_BLOCK):
        self.cocycle = cocycle
        self.n = n
        self.direction = direction
        self.block = block

    def fit(self, X=None, y=None):
        c = check_cocycle(self.cocycle)
        check_positive_int(self.n, "n")
        if self.direction not in (FORWARD, BACKWARD):
            raise InvalidParameter(f"direction must be {FORWARD!r} or {BACKWARD!r}")
        self.n_features_out_ = c.dim
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_out_")
        pts = check_sample(X, self.cocycle.system)
        sign = 1 if self.direction == FORWARD else -1
        L = self.cocycle.log_svd_paths(pts, [sign * self.n], self.block)
        return L[:, 0, :] / self.n


class DominationDetector(BaseEstimator):
    """Fits the domination line at index ``k`` over a sample of points.

    After ``fit``: ``verdict_`` (a DominationVerdict), ``dominated_``,
    ``rate_`` and ``log_offset_``.  ``predict`` tells, per point, whether its
    gap sequence stays above the fitted line minus the slack.
    """

    def __init__(self, cocycle=None, k=1, horizon=4096, schedule=None, rate_floor=0.01, slack_factor=3.0):
        self.cocycle = cocycle
        self.k = k
        self.horizon = horizon
        self.schedule = schedule
        self.rate_floor = rate_floor
        self.slack_factor = slack_factor

    def _config(self):
        return DominationConfig(rate_floor=self.rate_floor, slack_factor=self.slack_factor)

    def fit(self, X, y=None):
        c = check_cocycle(self.cocycle)
        pts = check_sample(X, c.system)
        check_positive_int(self.k, "k")
        self.schedule_ = resolve_schedule(self.schedule, self.horizon)
        L = log_sv_table(c, pts, self.schedule_)
        self.verdict_ = _domination_from_table(L, self.schedule_, self.k, self._config())
        self.dominated_ = self.verdict_.dominated
        self.rate_ = self.verdict_.rate
        self.log_offset_ = self.verdict_.log_offset
        return self

    def predict(self, X):
        check_is_fitted(self, "verdict_")
        pts = check_sample(X, self.cocycle.system)
        L = log_sv_table(self.cocycle, pts, self.schedule_)
        v = self.verdict_
        ns = np.array(self.schedule_, dtype=float)
        keep = ns >= v.n_min
        Y = L[:, keep, self.k - 1] - L[:, keep, self.k]
        margin = (Y - (v.rate * ns[keep] + v.log_offset)).min(axis=1)
        return margin >= -v.slack


class SackerSellEstimator(BaseEstimator):
    def __init__(self, cocycle=None, horizon=4096, schedule=None, grid_step=0.02, rate_floor=0.01):
        self.cocycle = cocycle
        self.horizon = horizon
        self.schedule = schedule
        self.grid_step = grid_step
        self.rate_floor = rate_floor

    def fit(self, X, y=None):
        c = check_cocycle(self.cocycle)
        pts = check_sample(X, c.system)
        check_tolerance(self.grid_step, "grid_step")
        self.estimate_ = estimate_sacker_sell(
            c,
            pts,
            schedule=resolve_schedule(self.schedule, self.horizon),
            config=DominationConfig(rate_floor=self.rate_floor),
            grid_step=self.grid_step,
        )
        self.intervals_ = list(self.estimate_.intervals)
        return self


class OseledetsEstimator(BaseEstimator, TransformerMixin):
    """Per-point Oseledets estimates; ``transform`` returns the exponents.

    Points whose splitting cannot be resolved get NaN exponents and are
    listed in ``unresolved_`` after ``transform``.
    """

    def __init__(self, cocycle=None, n=200, dims=None, angle_threshold=0.05):
        self.cocycle = cocycle
        self.n = n
        self.dims = dims
        self.angle_threshold = angle_threshold

    def fit(self, X=None, y=None):
        c = check_cocycle(self.cocycle)
        check_positive_int(self.n, "n")
        dims = (1,) * c.dim if self.dims is None else tuple(self.dims)
        if sum(dims) != c.dim:
            raise InvalidParameter(f"dims {dims} must sum to {c.dim}")
        self.dims_ = dims
        return self

    def transform(self, X):
        check_is_fitted(self, "dims_")
        pts = check_sample(X, self.cocycle.system)
        self.estimates_, self.unresolved_ = [], []
        out = np.full((len(pts), len(self.dims_)), np.nan)
        for i, x in enumerate(pts):
            try:
                est = estimate_oseledets(self.cocycle, x, self.n, self.dims_, self.angle_threshold)
            except SplittingUnresolved:
                self.estimates_.append(None)
                self.unresolved_.append(i)
                continue
            self.estimates_.append(est)
            out[i] = est.exponents
        return out


class RegularityProbe(BaseEstimator):
    """``fit`` runs the complete-regularity probe over the sample (``report_``);
    ``predict`` labels points ``regular_consistent`` / ``irregular_evidence`` /
    ``inconclusive``."""

    def __init__(self, cocycle=None, n=4096, tol=0.02, angle_threshold=0.05):
        self.cocycle = cocycle
        self.n = n
        self.tol = tol
        self.angle_threshold = angle_threshold

    def _config(self):
        return ProbeConfig(tol=check_tolerance(self.tol), angle_threshold=self.angle_threshold)

    def fit(self, X, y=None):
        c = check_cocycle(self.cocycle)
        pts = check_sample(X, c.system)
        self.report_ = probe_complete_regularity(c, pts, check_positive_int(self.n, "n", 2), self._config())
        self.verdict_ = self.report_.verdict
        return self

    def predict(self, X):
        check_is_fitted(self, "report_")
        pts = check_sample(X, self.cocycle.system)
        return np.array([r.verdict for r in probe_points(self.cocycle, pts, self.n, self._config())])
