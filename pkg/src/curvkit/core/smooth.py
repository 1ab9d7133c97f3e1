"""Twice differentiable maps with exact first and second derivatives."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from curvkit.errors import DimensionMismatch


def _as_point(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape != (n,):
        raise DimensionMismatch(f"expected a point of dimension {n}, got shape {x.shape}")
    return x


class SmoothMap:
    """A C^2 map from R^dim_in to R^dim_out.

    Subclasses implement ``_value``, ``_jacobian`` and ``_hessian``; the public
    methods validate dimensions. ``hessian`` returns an array of shape
    ``(dim_out, dim_in, dim_in)``, one symmetric matrix per output component.
    """

    dim_in: int
    dim_out: int

    def value(self, x) -> np.ndarray:
        return np.asarray(self._value(_as_point(x, self.dim_in)), dtype=float).reshape(self.dim_out)

    def jacobian(self, x) -> np.ndarray:
        jac = np.asarray(self._jacobian(_as_point(x, self.dim_in)), dtype=float)
        return jac.reshape(self.dim_out, self.dim_in)

    def hessian(self, x) -> np.ndarray:
        hess = np.asarray(self._hessian(_as_point(x, self.dim_in)), dtype=float)
        return hess.reshape(self.dim_out, self.dim_in, self.dim_in)

    def value_many(self, points) -> np.ndarray:
        """Evaluate at each row of ``points``; shape ``(k, dim_out)``."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim_in)
        return np.array([self._value(p) for p in pts], dtype=float).reshape(len(pts), self.dim_out)

    def scalar(self, x) -> float:
        """Value of a scalar map as a float."""
        if self.dim_out != 1:
            raise DimensionMismatch("scalar() needs dim_out == 1")
        return float(self.value(x)[0])

    def gradient(self, x) -> np.ndarray:
        if self.dim_out != 1:
            raise DimensionMismatch("gradient() needs dim_out == 1")
        return self.jacobian(x)[0]

    def curvature(self, x, w, weights=None) -> float:
        """``sum_k weights_k * w^T hess_k(x) w`` (weights default to 1 for scalar maps)."""
        hess = self.hessian(x)
        w = _as_point(w, self.dim_in)
        quad = np.einsum("kij,i,j->k", hess, w, w)
        if weights is None:
            if self.dim_out != 1:
                raise DimensionMismatch("weights are required for vector maps")
            return float(quad[0])
        return float(np.dot(np.asarray(weights, dtype=float).reshape(self.dim_out), quad))

    def _value(self, x):
        raise NotImplementedError

    def _jacobian(self, x):
        raise NotImplementedError

    def _hessian(self, x):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class FunctionMap(SmoothMap):
    """Smooth map assembled from user callables (library use only)."""

    dim_in: int
    dim_out: int
    value_fn: Callable
    jacobian_fn: Callable
    hessian_fn: Callable
    name: str = "function"

    def _value(self, x):
        return self.value_fn(x)

    def _jacobian(self, x):
        return self.jacobian_fn(x)

    def _hessian(self, x):
        return self.hessian_fn(x)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


class PolyForm(SmoothMap):
    """Scalar polynomial of degree at most three with exact derivatives.

    Three kinds are supported:

    ``affine``     ``a.x + c``
    ``quadratic``  ``0.5 x^T Q x + a.x + c`` with ``Q`` symmetrized
    ``cubic``      ``c + sum_k coef_k * prod_i x_i^{p_ki}`` with total degree <= 3
    """

    dim_out = 1

    def __init__(self, kind: str, dim: int, *, a=None, Q=None, c: float = 0.0, terms=()):
        if kind not in ("affine", "quadratic", "cubic"):
            raise ValueError(f"unknown PolyForm kind {kind!r}")
        self.kind = kind
        self.dim_in = int(dim)
        n = self.dim_in
        self.c = float(c)
        self.a = _frozen(np.zeros(n) if a is None else np.asarray(a, dtype=float).reshape(n))
        if Q is None:
            Q = np.zeros((n, n))
        Q = np.asarray(Q, dtype=float).reshape(n, n)
        self.Q = _frozen(0.5 * (Q + Q.T))
        coefs, powers = [], []
        for coef, pw in terms:
            pw = np.asarray(pw, dtype=int).reshape(n)
            if (pw < 0).any() or pw.sum() > 3:
                raise ValueError("cubic terms need nonnegative powers with total degree <= 3")
            coefs.append(float(coef))
            powers.append(pw)
        if kind != "cubic" and coefs:
            raise ValueError("terms are only allowed for cubic PolyForms")
        self.coefs = _frozen(np.array(coefs, dtype=float))
        self.powers = np.array(powers, dtype=int).reshape(len(coefs), n)
        self.powers.setflags(write=False)

    @classmethod
    def affine(cls, a, c=0.0):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        return cls("affine", len(a), a=a, c=c)

    @classmethod
    def quadratic(cls, Q, a=None, c=0.0):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        return cls("quadratic", Q.shape[0], Q=Q, a=a, c=c)

    @classmethod
    def cubic(cls, dim, terms, c=0.0, a=None, Q=None):
        return cls("cubic", dim, terms=terms, c=c, a=a, Q=Q)

    def __repr__(self):
        return f"PolyForm({self.kind}, dim={self.dim_in})"

    def __eq__(self, other):
        return (
            isinstance(other, PolyForm)
            and self.kind == other.kind
            and self.dim_in == other.dim_in
            and self.c == other.c
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.Q, other.Q)
            and np.array_equal(self.coefs, other.coefs)
            and np.array_equal(self.powers, other.powers)
        )

    __hash__ = None

    def scaled(self, alpha: float) -> "PolyForm":
        return PolyForm(
            self.kind,
            self.dim_in,
            a=alpha * self.a,
            Q=alpha * self.Q,
            c=alpha * self.c,
            terms=[(alpha * k, p) for k, p in zip(self.coefs, self.powers)],
        )

    # Monomial part, vectorized over rows of X.
    def _mono_value(self, X):
        if not len(self.coefs):
            return np.zeros(len(X))
        prods = np.prod(X[:, None, :] ** self.powers[None, :, :], axis=2)
        return prods @ self.coefs

    def _mono_grad(self, x):
        n = self.dim_in
        g = np.zeros(n)
        for coef, pw in zip(self.coefs, self.powers):
            for j in range(n):
                if pw[j] == 0:
                    continue
                q = pw.copy()
                q[j] -= 1
                g[j] += coef * pw[j] * np.prod(x**q)
        return g

    def _mono_hess(self, x):
        n = self.dim_in
        H = np.zeros((n, n))
        for coef, pw in zip(self.coefs, self.powers):
            for i in range(n):
                if pw[i] == 0:
                    continue
                qi = pw.copy()
                qi[i] -= 1
                for j in range(n):
                    if qi[j] == 0:
                        continue
                    q = qi.copy()
                    q[j] -= 1
                    H[i, j] += coef * pw[i] * qi[j] * np.prod(x**q)
        return H

    def value_many(self, points):
        X = np.asarray(points, dtype=float).reshape(-1, self.dim_in)
        quad = 0.5 * np.einsum("ki,ij,kj->k", X, self.Q, X)
        return (quad + X @ self.a + self.c + self._mono_value(X)).reshape(-1, 1)

    def _value(self, x):
        return self.value_many(x[None, :])[0]

    def _jacobian(self, x):
        return (self.Q @ x + self.a + self._mono_grad(x)).reshape(1, -1)

    def _hessian(self, x):
        return (self.Q + self._mono_hess(x))[None, :, :]


class AffineMap(SmoothMap):
    """``x -> A x + b``."""

    def __init__(self, A, b=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        self.A = _frozen(A)
        self.dim_out, self.dim_in = A.shape
        self.b = _frozen(np.zeros(self.dim_out) if b is None else np.asarray(b, dtype=float).reshape(self.dim_out))

    @classmethod
    def identity(cls, n: int) -> "AffineMap":
        return cls(np.eye(n))

    def value_many(self, points):
        X = np.asarray(points, dtype=float).reshape(-1, self.dim_in)
        return X @ self.A.T + self.b

    def _value(self, x):
        return self.A @ x + self.b

    def _jacobian(self, x):
        return self.A

    def _hessian(self, x):
        return np.zeros((self.dim_out, self.dim_in, self.dim_in))


@dataclass(frozen=True, eq=False)
class Stack(SmoothMap):
    """Vector map whose component blocks are the given maps, all on the same input."""

    parts: Sequence[SmoothMap] = field(default_factory=tuple)

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("Stack needs at least one component")
        dims = {p.dim_in for p in parts}
        if len(dims) != 1:
            raise DimensionMismatch(f"stacked maps disagree on input dimension: {sorted(dims)}")
        object.__setattr__(self, "parts", parts)

    @property
    def dim_in(self):
        return self.parts[0].dim_in

    @property
    def dim_out(self):
        return sum(p.dim_out for p in self.parts)

    def value_many(self, points):
        return np.hstack([p.value_many(points) for p in self.parts])

    def _value(self, x):
        return np.concatenate([p.value(x) for p in self.parts])

    def _jacobian(self, x):
        return np.vstack([p.jacobian(x) for p in self.parts])

    def _hessian(self, x):
        return np.concatenate([p.hessian(x) for p in self.parts], axis=0)


@dataclass(frozen=True, eq=False)
class Combination(SmoothMap):
    """Scalar map ``x -> <weights, F(x)>``."""

    inner: SmoothMap
    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(np.asarray(self.weights, dtype=float).reshape(self.inner.dim_out))
        object.__setattr__(self, "weights", w)

    dim_out = 1

    @property
    def dim_in(self):
        return self.inner.dim_in

    def value_many(self, points):
        return (self.inner.value_many(points) @ self.weights).reshape(-1, 1)

    def _value(self, x):
        return np.array([self.weights @ self.inner.value(x)])

    def _jacobian(self, x):
        return (self.weights @ self.inner.jacobian(x)).reshape(1, -1)

    def _hessian(self, x):
        return np.tensordot(self.weights, self.inner.hessian(x), axes=1)[None, :, :]


def smooth_eval2(f: SmoothMap, x):
    """Value, Jacobian and Hessians of ``f`` at the same point."""
    x = _as_point(x, f.dim_in)
    return f.value(x), f.jacobian(x), f.hessian(x)


def compose_affine(f: SmoothMap, A, b=None) -> SmoothMap:
    """``x -> f(A x + b)`` with chain-rule derivatives."""
    inner = AffineMap(A, b)
    if inner.dim_out != f.dim_in:
        raise DimensionMismatch("affine inner map does not match outer input dimension")
    M = inner.A

    def value(x):
        return f.value(inner.value(x))

    def jac(x):
        return f.jacobian(inner.value(x)) @ M

    def hess(x):
        return np.einsum("kab,ai,bj->kij", f.hessian(inner.value(x)), M, M)

    return FunctionMap(inner.dim_in, f.dim_out, value, jac, hess, name="composed")
