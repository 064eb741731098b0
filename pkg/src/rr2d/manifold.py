"""Quadratic-form ascent on the complex circle manifold.

Points are complex vectors with unit-modulus entries. Tangent vectors at
``w`` satisfy ``Re(t_k conj(w_k)) = 0`` for every ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError


@dataclass(frozen=True)
class AscentOptions:
    max_iters: int = 200
    grad_tol: float = 1e-8
    initial_step: float = 1.0
    backtrack_factor: float = 0.5
    armijo_c: float = 1e-4
    restarts: int = 1

    def __post_init__(self):
        if not 0 < self.backtrack_factor < 1:
            raise DomainError("backtrack_factor must lie in (0, 1)")
        if min(self.max_iters, self.restarts) < 1:
            raise DomainError("max_iters and restarts must be >= 1")
        if min(self.grad_tol, self.initial_step, self.armijo_c) <= 0:
            raise DomainError("tolerances and steps must be positive")


def normalize_phases(z):
    """Entrywise ``z / |z|``; exact zeros map to 1."""
    z = np.asarray(z, dtype=complex)
    mag = np.abs(z)
    out = np.ones_like(z)
    nz = mag > 0
    out[nz] = z[nz] / mag[nz]
    return out


def quadratic_objective(Q, w):
    return float(np.real(np.vdot(w, Q @ w)))


def tangent_project(w, u):
    return u - np.real(u * w.conj()) * w


def riemannian_gradient(Q, w):
    """Tangent projection of the Euclidean gradient ``2 Q w`` of ``w^H Q w``."""
    Q = np.asarray(Q)
    w = np.asarray(w)
    if Q.shape != (w.size, w.size):
        raise DomainError(f"Q {Q.shape} does not match vector of length {w.size}")
    return tangent_project(w, 2.0 * (Q @ w))


def retract(w, step, direction):
    """Move along ``direction`` and renormalise each entry to unit modulus."""
    z = np.asarray(w) + step * np.asarray(direction)
    mag = np.abs(z)
    zero = mag == 0
    if np.any(zero):
        z = z.copy()
        z[zero] = np.asarray(w)[zero] * np.finfo(float).eps
        mag = np.abs(z)
    return z / mag


def _ascend(Q, w, opts, callback=None):
    f = quadratic_objective(Q, w)
    step = None
    for it in range(opts.max_iters):
        g = riemannian_gradient(Q, w)
        gnorm2 = float(np.real(np.vdot(g, g)))
        if np.sqrt(gnorm2) < opts.grad_tol:
            break
        # First trial step scaled so the initial move has length initial_step;
        # afterwards start from twice the last accepted step.
        t = opts.initial_step / np.sqrt(gnorm2) if step is None else 2.0 * step
        while True:
            cand = retract(w, t, g)
            fc = quadratic_objective(Q, cand)
            if fc >= f + opts.armijo_c * t * gnorm2:
                break
            t *= opts.backtrack_factor
            if t * np.sqrt(gnorm2) < 1e-16:
                cand, fc = None, f
                break
        if cand is None:
            break
        w, f, step = cand, fc, t
        if callback is not None:
            callback(it, w, f)
    return w, f


def maximize_quadratic_on_circle(Q, w_init, opts=AscentOptions(), rng=None, callback=None):
    """Maximise ``w^H Q w`` subject to ``|w_k| = 1`` by Riemannian gradient ascent.

    Armijo backtracking guarantees a nondecreasing objective. With
    ``opts.restarts > 1`` the additional starts are random phase vectors from
    ``rng`` and the best result is returned (ties go to the earliest start).

    Returns
    -------
    w : ndarray
        Best unit-modulus vector found.
    objective : float
        ``w^H Q w`` at ``w``.
    """
    Q = np.asarray(Q, dtype=complex)
    w0 = normalize_phases(w_init)
    if Q.shape != (w0.size, w0.size):
        raise DomainError("Q does not match the initial point")
    rng = np.random.default_rng(0) if rng is None else rng
    starts = [w0] + [np.exp(2j * np.pi * rng.random(w0.size)) for _ in range(opts.restarts - 1)]
    best_w, best_f = None, -np.inf
    for start in starts:
        w, f = _ascend(Q, start, opts, callback)
        if f > best_f:
            best_w, best_f = w, f
    return best_w, best_f


def hessian_spectrum_at(objective, point, fd_step=1e-4):
    """Sorted eigenvalues of the central-difference Hessian of ``objective``.

    ``objective`` maps a real parameter vector (e.g. analog phases) to a real
    number; ``H[m, n]`` uses the four-point stencil with step ``fd_step``.
    """
    x = np.asarray(point, dtype=float)
    n = x.size
    h = float(fd_step)
    E = np.eye(n) * h

    def f(z):
        val = float(objective(z))
        if not np.isfinite(val):
            raise NumericError("objective is not finite near the probe point")
        return val

    H = np.empty((n, n))
    for m in range(n):
        for k in range(m, n):
            H[m, k] = (f(x + E[m] + E[k]) - f(x + E[m] - E[k])
                       - f(x - E[m] + E[k]) + f(x - E[m] - E[k])) / (4.0 * h * h)
            H[k, m] = H[m, k]
    return np.linalg.eigvalsh(0.5 * (H + H.T))
