"""Estimator-style wrappers around the cylinder cover of a truncated group.

``fit`` takes generator matrices as rows of 8 reals, ``transform`` maps points
``(x, y, t)`` to cylinder memberships and ``predict`` returns the internal rank
of the short set at each point.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .freegroup import internal_rank
from .geometry import Isometry, Point
from .group import GroupSpec, enumerate_ball, label_cylinder, maximal_cyclics, short_set


def check_points(X) -> np.ndarray:
    """Validate an (n, 3) array of upper half-space points ``(x, y, t)`` with ``t > 0``."""
    X = check_array(X, dtype=np.float64)
    if X.shape[1] != 3:
        raise ValueError(f"points need 3 columns (x, y, t), got {X.shape[1]}")
    if np.any(X[:, 2] <= 0):
        raise ValueError("point heights must be positive")
    return X


def check_generators(G) -> list[Isometry]:
    """Validate an (n, 8) array of matrices and convert to isometries."""
    G = check_array(G, dtype=np.float64)
    if G.shape[1] != 8:
        raise ValueError(f"generators need 8 columns (re/im of a, b, c, d), got {G.shape[1]}")
    return [Isometry.from_reals(row) for row in G]


def _points(X) -> list[Point]:
    return [Point(complex(x, y), t) for x, y, t in X]


class CylinderCover(BaseEstimator, TransformerMixin):
    """Cylinders of the short maximal cyclic subgroups of a truncated group.

    Parameters
    ----------
    k : int
        Rank parameter; ``lam`` defaults to ``log(2k - 1)``.
    lam : float or None
        Displacement threshold.
    ball_radius : int
        Word length of the truncation.
    """

    def __init__(self, k: int = 3, lam=None, ball_radius: int = 3):
        self.k = k
        self.lam = lam
        self.ball_radius = ball_radius

    def _lambda(self) -> float:
        return float(self.lam) if self.lam is not None else math.log(2 * self.k - 1)

    def fit(self, X, y=None):
        gens = check_generators(X)
        lam = self._lambda()
        if not lam > 0:
            raise ValueError("lam must be positive")
        self.table_ = enumerate_ball(GroupSpec.from_list(gens, self.ball_radius))
        self.labels_ = maximal_cyclics(self.table_, lam)
        self.cylinders_ = [label_cylinder(lab, lam) for lab in self.labels_]
        self.lambda_ = lam
        self.n_features_in_ = 8
        return self

    def transform(self, X):
        """Boolean membership matrix, one column per label."""
        check_is_fitted(self, "labels_")
        pts = _points(check_points(X))
        out = np.zeros((len(pts), len(self.labels_)), dtype=bool)
        for i, p in enumerate(pts):
            found = set(short_set(self.table_, self.lambda_, p).words)
            out[i] = [lab.word in found for lab in self.labels_]
        return out

    def predict(self, X):
        """Internal rank of the short set at each point."""
        check_is_fitted(self, "labels_")
        pts = _points(check_points(X))
        return np.array(
            [internal_rank(short_set(self.table_, self.lambda_, p).words).value for p in pts],
            dtype=int,
        )

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "labels_")
        return np.array([lab.word for lab in self.labels_], dtype=object)
