"""Polynomial feature maps and the whitening transformation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._random import stream

MAX_FEATURE_DIM = 10_000
MAX_CONDITION = 1e12
EIGENVALUE_FLOOR = 1e-12


class FeatureDimensionError(ValueError):
    """Raised when a feature map would exceed the configured dimension cap."""


class SingularCovarianceError(np.linalg.LinAlgError):
    """Raised when the feature second-moment matrix cannot be whitened."""


def monomial_exponents(d, k):
    """Exponent multi-indices with total degree <= k, graded-lex ordered.

    Within a degree the order follows ``combinations_with_replacement`` over
    variable indices, so for d=2, k=2 the coordinates are
    (1, x1, x2, x1^2, x1*x2, x2^2).
    """
    rows = []
    for degree in range(k + 1):
        for combo in itertools.combinations_with_replacement(range(d), degree):
            alpha = [0] * d
            for i in combo:
                alpha[i] += 1
            rows.append(alpha)
    return np.array(rows, dtype=np.int64).reshape(len(rows), d)


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Monomial feature map, optionally followed by a linear transform.

    ``transform`` is the D x D matrix W so that the map evaluates to
    ``W @ monomials(x)``; ``None`` means the plain monomial map.
    """

    input_dim: int
    degree: int
    transform: np.ndarray | None = None
    exponents: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.input_dim < 1 or self.degree < 1:
            raise ValueError("input_dim and degree must be >= 1")
        dim = math.comb(self.input_dim + self.degree, self.degree)
        if dim > MAX_FEATURE_DIM:
            raise FeatureDimensionError(
                f"feature dimension {dim} exceeds cap {MAX_FEATURE_DIM}"
            )
        object.__setattr__(self, "exponents", monomial_exponents(self.input_dim, self.degree))
        if self.transform is not None:
            w = np.array(self.transform, dtype=float)
            if w.shape != (dim, dim):
                raise ValueError(f"transform must be {dim}x{dim}, got {w.shape}")
            w.setflags(write=False)
            object.__setattr__(self, "transform", w)

    @property
    def output_dim(self):
        return len(self.exponents)

    @property
    def kind(self):
        return "monomial" if self.transform is None else "whitened"

    @property
    def has_constants(self):
        # zero multi-index is always present; an invertible transform keeps the span
        return True

    @property
    def base(self):
        return FeatureMap(self.input_dim, self.degree)

    def monomials(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.input_dim:
            raise ValueError(
                f"expected points of dimension {self.input_dim}, got {pts.shape[1]}"
            )
        out = np.ones((pts.shape[0], self.output_dim))
        for j, alpha in enumerate(self.exponents):
            for i, a in enumerate(alpha):
                if a:
                    out[:, j] *= pts[:, i] ** a
        return out[0] if single else out

    def evaluate(self, x):
        """Evaluate at a point (shape (d,)) or a batch of points (shape (n, d))."""
        phi = self.monomials(x)
        if self.transform is None:
            return phi
        return phi @ self.transform.T

    __call__ = evaluate

    def to_base_coefficients(self, ell):
        """Coefficients on the monomial basis of the functional ``ell``."""
        ell = np.asarray(ell, dtype=float)
        if self.transform is None:
            return ell.copy()
        return self.transform.T @ ell

    def from_base_coefficients(self, coeffs):
        """Inverse of :meth:`to_base_coefficients`."""
        coeffs = np.asarray(coeffs, dtype=float)
        if self.transform is None:
            return coeffs.copy()
        return np.linalg.solve(self.transform.T, coeffs)

    def to_dict(self):
        out = {"kind": self.kind, "d": self.input_dim, "k": self.degree}
        if self.transform is not None:
            out["transform"] = self.transform.tolist()
        return out

    @classmethod
    def from_dict(cls, data):
        if data["kind"] not in ("monomial", "whitened"):
            raise ValueError(f"unknown feature map kind {data['kind']!r}")
        transform = data.get("transform")
        if data["kind"] == "whitened" and transform is None:
            raise ValueError("whitened feature map requires a transform")
        return cls(int(data["d"]), int(data["k"]),
                   None if transform is None else np.array(transform, dtype=float))


def monomial_map(d, k):
    return FeatureMap(d, k)


def evaluate(fmap, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1 and len(x) != fmap.input_dim:
        raise ValueError(f"expected a point of length {fmap.input_dim}, got {len(x)}")
    return fmap.evaluate(x)


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    matrix: np.ndarray
    sample_count: int
    condition_number: float


def default_whitening_samples(dim):
    return max(10 * dim, 50_000)


def second_moment(features):
    """Symmetrized (1/M) sum of outer products of the rows of ``features``."""
    features = np.asarray(features, dtype=float)
    lam = features.T @ features / features.shape[0]
    return 0.5 * (lam + lam.T)


def estimate_covariance(fmap, noise, samples=None, seed=0, max_condition=MAX_CONDITION):
    """Monte Carlo estimate of E[Phi(X) Phi(X)^T] under the background noise."""
    dim = fmap.output_dim
    if samples is None:
        samples = default_whitening_samples(dim)
    if samples < 10 * dim:
        raise ValueError(f"need at least {10 * dim} samples for D={dim}, got {samples}")
    pts = noise.sample(samples, stream(seed, "covariance"))
    lam = second_moment(fmap.evaluate(pts))
    eig = np.linalg.eigvalsh(lam)
    cond = np.inf if eig[0] <= 0 else float(eig[-1] / eig[0])
    if not cond <= max_condition:
        raise SingularCovarianceError(
            f"second-moment matrix is singular (condition number {cond:.3g})"
        )
    return CovarianceEstimate(lam, samples, cond)


def inverse_sqrt(matrix, floor=EIGENVALUE_FLOOR):
    """Symmetric inverse square root via eigendecomposition."""
    vals, vecs = np.linalg.eigh(np.asarray(matrix, dtype=float))
    vals = np.maximum(vals, floor)
    w = (vecs / np.sqrt(vals)) @ vecs.T
    return 0.5 * (w + w.T)


def whiten(fmap, cov):
    """Compose ``fmap`` with the inverse square root of ``cov``."""
    if not cov.condition_number <= MAX_CONDITION:
        raise SingularCovarianceError("cannot whiten with a singular covariance estimate")
    w = inverse_sqrt(cov.matrix)
    if fmap.transform is not None:
        w = w @ fmap.transform
    return FeatureMap(fmap.input_dim, fmap.degree, w)


def whitened_monomial_map(d, k, noise, samples=None, seed=0):
    """Shortcut: monomial map of degree k whitened against ``noise``."""
    fmap = monomial_map(d, k)
    return whiten(fmap, estimate_covariance(fmap, noise, samples, seed))
