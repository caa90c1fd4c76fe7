"""scikit-learn style wrappers: amplitude features and diagram distances."""

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .amplitude import evaluate, format_spec, parse_spec
from .barcode import Bar, Barcode
from .distance import SUM, LpFold, MAX, lp_hilbert_distance, path_metric_1param, wasserstein
from .gridmod import GridModule, HilbertGrid, InvalidModuleError, validate

__all__ = ["check_barcode", "check_grid_module", "AmplitudeVectorizer", "DiagramDistance"]


def check_barcode(x):
    """Coerce a ``Barcode``, a list of pairs or a ``(k, 2)`` array."""
    if isinstance(x, Barcode):
        return x
    arr = np.asarray(x, dtype=float)
    if arr.size == 0:
        return Barcode([])
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected (k, 2) birth/death pairs, got shape {arr.shape}")
    return Barcode([Bar(float(b), float(d)) for b, d in arr])


def check_grid_module(M):
    if isinstance(M, HilbertGrid):
        return M
    if not isinstance(M, GridModule):
        raise TypeError(f"expected a GridModule, got {type(M).__name__}")
    v = validate(M)
    if v is not None:
        raise InvalidModuleError(v)
    return M


def _check_input(x):
    if isinstance(x, (GridModule, HilbertGrid)):
        return check_grid_module(x)
    return check_barcode(x)


def _specs(specs):
    return [parse_spec(s) if isinstance(s, str) else s for s in specs]


class AmplitudeVectorizer(TransformerMixin, BaseEstimator):
    """One column per amplitude spec."""

    def __init__(self, specs=("p1", "p2", "pinf", "totpers"), exact=False):
        self.specs = specs
        self.exact = exact

    def fit(self, X=None, y=None):
        self.specs_ = _specs(self.specs)
        self.n_features_out_ = len(self.specs_)
        return self

    def transform(self, X):
        check_is_fitted(self, "specs_")
        rows = []
        for x in X:
            x = _check_input(x)
            rows.append([float(evaluate(s, x, exact=self.exact)) for s in self.specs_])
        return np.array(rows, dtype=float).reshape(len(rows), len(self.specs_))

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "specs_")
        return np.array([format_spec(s) for s in self.specs_], dtype=object)


class DiagramDistance(TransformerMixin, BaseEstimator):
    """Distances from each input to every fitted input.

    ``metric`` is ``"wasserstein"`` (``p=inf`` gives bottleneck), ``"path"``
    (uses ``spec`` and ``fold``) or ``"lp"`` (Hilbert functions).
    """

    def __init__(self, metric="wasserstein", p=math.inf, ground="linf", spec="p1", fold="sum"):
        self.metric = metric
        self.p = p
        self.ground = ground
        self.spec = spec
        self.fold = fold

    def fit(self, X, y=None):
        if self.metric not in ("wasserstein", "path", "lp"):
            raise ValueError(f"unknown metric {self.metric!r}")
        self.fit_inputs_ = [_check_input(x) for x in X]
        return self

    def _fold(self):
        if self.fold == "sum":
            return SUM
        if self.fold == "max":
            return MAX
        return LpFold(self.p)

    def _one(self, a, b):
        if self.metric == "wasserstein":
            return wasserstein(self.p, a, b, ground=self.ground)
        if self.metric == "lp":
            return lp_hilbert_distance(self.p, a, b)
        spec = parse_spec(self.spec) if isinstance(self.spec, str) else self.spec
        return path_metric_1param(spec, a, b, self._fold()).value

    def transform(self, X):
        check_is_fitted(self, "fit_inputs_")
        X = [_check_input(x) for x in X]
        return np.array([[self._one(a, b) for b in self.fit_inputs_] for a in X],
                        dtype=float).reshape(len(X), len(self.fit_inputs_))
