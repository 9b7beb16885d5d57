"""sklearn-compatible estimator facade over the online learner."""

from __future__ import annotations

import copy

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .learner import ModelFlags, ModelState


class PHIDA(ClusterMixin, BaseEstimator):
    """Online prototype clustering with persistence-constrained mapping.

    Samples are processed strictly in row order (this is a streaming
    learner, so the ordering matters).  ``fit`` consumes the rows once and
    freezes the output clustering; ``partial_fit`` keeps the stream open.
    ``labels_`` and ``predict`` use 0-based cluster ids.

    Parameters
    ----------
    refresh : bool
        Rebuild the component view periodically during the stream.
    delete_nodes : bool
        Physically remove stale single-support nodes during maintenance.
    prune_isolated : bool
        Drop isolated nodes from the graph input during rebuilds.
    use_persistence : bool
        Partition the node graph by density persistence; when off, plain
        connected components are used instead.
    """

    def __init__(
        self,
        refresh: bool = True,
        delete_nodes: bool = True,
        prune_isolated: bool = True,
        use_persistence: bool = True,
    ):
        self.refresh = refresh
        self.delete_nodes = delete_nodes
        self.prune_isolated = prune_isolated
        self.use_persistence = use_persistence

    def _flags(self) -> ModelFlags:
        return ModelFlags(
            refresh=self.refresh,
            delete=self.delete_nodes,
            prune_ph_input=self.prune_isolated,
            use_ph=self.use_persistence,
        )

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        self.model_ = ModelState(self._flags())
        for row in X:
            self.model_.process_sample(row)
        self.model_.finalize()
        self.n_features_in_ = X.shape[1]
        self.view_ = self.model_.ph_view.view
        self.n_clusters_ = self.view_.n_clusters
        self.labels_ = self.model_.predict_batch(X) - 1
        return self

    def partial_fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if not hasattr(self, "model_"):
            self.model_ = ModelState(self._flags())
            self.n_features_in_ = X.shape[1]
        for row in X:
            self.model_.process_sample(row)
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        model = self.model_
        if model.ph_view is None:
            # Mid-stream prediction: finalize a snapshot, leave learning intact.
            model = copy.deepcopy(self.model_)
            model.finalize()
        return model.predict_batch(X) - 1

    @property
    def node_count_(self) -> int:
        check_is_fitted(self, "model_")
        return self.model_.node_count

    @property
    def nodes_(self) -> np.ndarray:
        check_is_fitted(self, "model_")
        return self.model_.representatives()

    @property
    def node_supports_(self) -> np.ndarray:
        check_is_fitted(self, "model_")
        return self.model_.supports().astype(int)
