"""scikit-learn style facade over the functional core.

``ChangeVectorizer`` turns version pairs into a per-term changed-count
matrix; ``MaturityEstimator`` scores them. Both hold only hyperparameters in
``__init__`` so ``get_params``/``set_params``/``clone`` work as usual.
"""
from __future__ import annotations

from typing import List

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from micose.diff import ChangeVector, count_term_changes
from micose.maturity import ACTIVE, CATALOG, ENHANCED, LEGACY, MaturityResult, Thresholds, compute_maturity
from micose.validation import check_catalog, check_choice, check_version_pairs


class ChangeVectorizer(TransformerMixin, BaseEstimator):
    """Version pairs -> matrix of changed counts, one column per catalog term."""

    def __init__(self, catalog=None):
        self.catalog = catalog

    def fit(self, X=None, y=None):
        self.catalog_ = check_catalog(self.catalog)
        self.n_features_out_ = len(self.catalog_)
        return self

    def vectors(self, X) -> List[ChangeVector]:
        check_is_fitted(self, "catalog_")
        return [count_term_changes(p, self.catalog_) for p in check_version_pairs(X)]

    def transform(self, X) -> np.ndarray:
        vecs = self.vectors(X)
        out = np.zeros((len(vecs), self.n_features_out_))
        for i, v in enumerate(vecs):
            for tid, count in v.counts.items():
                out[i, self.catalog_.position(tid)] = count.changed
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "catalog_")
        return np.array([t.id for t in self.catalog_.terms], dtype=object)


class MaturityEstimator(BaseEstimator):
    """Maturity of version pairs.

    ``transform`` yields the per-term delta matrix, ``predict`` the maturity
    per pair, ``predict_color`` the traffic light. Nothing is learned; ``fit``
    only validates parameters and resolves the catalog.
    """

    def __init__(self, catalog=None, mode=ENHANCED, aggregation=ACTIVE, green=0.90, yellow=0.70):
        self.catalog = catalog
        self.mode = mode
        self.aggregation = aggregation
        self.green = green
        self.yellow = yellow

    def fit(self, X=None, y=None):
        check_choice("mode", self.mode, (ENHANCED, LEGACY))
        check_choice("aggregation", self.aggregation, (ACTIVE, CATALOG))
        self.thresholds_ = Thresholds(self.green, self.yellow)
        self.vectorizer_ = ChangeVectorizer(self.catalog).fit()
        self.catalog_ = self.vectorizer_.catalog_
        return self

    def results(self, X) -> List[MaturityResult]:
        check_is_fitted(self, "catalog_")
        return [compute_maturity(v, self.catalog_, self.mode, self.aggregation, self.thresholds_)
                for v in self.vectorizer_.vectors(X)]

    def transform(self, X) -> np.ndarray:
        res = self.results(X)
        out = np.zeros((len(res), len(self.catalog_)))
        for i, r in enumerate(res):
            for td in r.term_deltas:
                out[i, self.catalog_.position(td.term_id)] = td.delta
        return out

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)

    def predict(self, X) -> np.ndarray:
        return np.array([r.maturity for r in self.results(X)])

    def predict_color(self, X) -> np.ndarray:
        return np.array([r.color for r in self.results(X)], dtype=object)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "catalog_")
        return self.vectorizer_.get_feature_names_out()
