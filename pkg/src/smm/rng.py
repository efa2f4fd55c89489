"""Seedable random variates and the small dense linear algebra they need.

Every sampler draws from an explicit ``numpy.random.Generator``; a chain owns
its stream, and identical ``(seed, stream)`` pairs reproduce bit-identical
variate sequences on the same build.

Matrix-variate convention
-------------------------
``sample_wishart(shape, rate, rng)`` uses the rate parametrization with
density proportional to ``|X|^(shape-(r+1)/2) * exp(-tr(rate @ X))``:

* ``E(X) = shape * inv(rate)``,
* equivalent to the textbook Wishart with ``df = 2*shape`` and scale matrix
  ``inv(rate)/2``,
* proper density iff ``shape > (r-1)/2``,
* if ``X ~ W(shape, rate)`` is a precision matrix, then
  ``E(inv(X)) = rate / (shape - (r+1)/2)``.

This is the most bug-prone convention in the package: conjugate precision
updates add ``n/2`` (not ``n``) to the shape for ``n`` observations.  The
gamma distribution is shape-rate throughout, so ``sample_gamma(a, a, rng)``
has mean one.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import (InvalidConcentration, InvalidParams, InvalidRate,
                     InvalidShape, NotPositiveDefinite)

_LOG_2PI = float(np.log(2.0 * np.pi))
_MAX_REJECTION_ROUNDS = 1000
# below this omega = sqrt(a*b), GIG draws with |p| >= 1 use the exact
# gamma/inverse-gamma limit law (total variation error < 1e-10)
_GIG_OMEGA_FLOOR = 1e-7


class RandomSeed(NamedTuple):
    """Seed plus stream id; distinct streams give independent generators."""

    seed: int
    stream: int = 0


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for (seed, stream); bit-stable for a fixed NumPy build."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.default_rng(ss)


# ---------------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------------

def cholesky(m: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with a single jitter retry.

    On a pivot failure the factorization is retried once with
    ``1e-10 * trace(m)/r`` added to the diagonal; a second failure raises
    :class:`NotPositiveDefinite`.  Silent repeated inflation is deliberately
    not attempted, so diverging sampler states surface as errors.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    scale = np.max(np.abs(m))
    if scale > 0 and np.max(np.abs(m - m.T)) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric to within 1e-12 relative")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        pass
    r = m.shape[0]
    jitter = 1e-10 * np.trace(m) / r
    try:
        return np.linalg.cholesky(m + jitter * np.eye(r))
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(
            f"Cholesky failed even after jitter {jitter:.3e}") from None


def chol_logdet(L: np.ndarray) -> float:
    """log-determinant of ``L @ L.T`` given the (stacked) lower factor L."""
    d = np.diagonal(L, axis1=-2, axis2=-1)
    return 2.0 * np.sum(np.log(d), axis=-1)


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + np.swapaxes(m, -1, -2))


# ---------------------------------------------------------------------------
# scalar/vector distributions
# ---------------------------------------------------------------------------

def sample_mvn(mean, cov, rng: np.random.Generator, size: int | None = None):
    """N(mean, cov) draws via ``mean + L z`` with L the Cholesky factor."""
    mean = np.asarray(mean, dtype=float)
    L = cholesky(cov)
    shape = mean.shape if size is None else (size,) + mean.shape
    z = rng.standard_normal(shape)
    return mean + z @ L.T


def sample_gamma(shape, rate, rng: np.random.Generator, size=None):
    """Shape-rate gamma: mean shape/rate, variance shape/rate**2."""
    if not np.all(np.asarray(shape) > 0):
        raise InvalidShape(f"gamma shape must be positive, got {shape}")
    if not np.all(np.asarray(rate) > 0):
        raise InvalidRate(f"gamma rate must be positive, got {rate}")
    return rng.gamma(shape, scale=1.0 / np.asarray(rate, dtype=float), size=size)


def _log_gamma_draws(shape: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # log Gamma(shape, 1) draws that stay finite for tiny shapes:
    # G = G' * U**(1/a) with G' ~ Gamma(a+1), so log G = log G' + log(U)/a.
    g = rng.standard_gamma(shape + 1.0)
    u = rng.random(np.shape(shape))
    with np.errstate(divide="ignore"):
        return np.log(g) + np.log(u) / shape


def sample_dirichlet(conc, rng: np.random.Generator, return_log: bool = False):
    """Dirichlet draw; exact in log space for concentrations below 0.1.

    Tiny concentrations (the sparse weight prior uses 0.001) underflow the
    naive gamma-normalize route about half the time; the log-space route
    keeps the largest coordinates exact and never yields an all-zero vector.
    """
    conc = np.asarray(conc, dtype=float)
    if conc.ndim != 1 or conc.size == 0:
        raise InvalidConcentration("concentration must be a nonempty vector")
    if not np.all(conc > 0):
        raise InvalidConcentration(f"nonpositive concentration entry in {conc}")
    if conc.min() < 0.1:
        logg = _log_gamma_draws(conc, rng)
        m = logg.max()
        logz = m + np.log(np.sum(np.exp(logg - m)))
        logw = logg - logz
        w = np.exp(logw)
    else:
        g = rng.standard_gamma(conc)
        w = g / g.sum()
        with np.errstate(divide="ignore"):
            logw = np.where(g > 0, np.log(g) - np.log(g.sum()), -np.inf)
    w = w / w.sum()
    if return_log:
        return w, logw
    return w


# ---------------------------------------------------------------------------
# Wishart
# ---------------------------------------------------------------------------

def wishart_bartlett(shape, scale_chol: np.ndarray,
                     rng: np.random.Generator) -> np.ndarray:
    """Stacked Bartlett draw of W(shape, rate) given ``chol(inv(rate)/2)``.

    ``scale_chol`` has shape (..., r, r); ``shape`` broadcasts over the
    leading dimensions.  Supports non-integer shapes via chi-square draws.
    """
    r = scale_chol.shape[-1]
    batch = scale_chol.shape[:-2]
    df = np.broadcast_to(2.0 * np.asarray(shape, dtype=float), batch)
    A = np.tril(rng.standard_normal(batch + (r, r)), -1)
    chi = rng.chisquare(df[..., None] - np.arange(r))
    idx = np.arange(r)
    A[..., idx, idx] = np.sqrt(chi)
    LA = scale_chol @ A
    return LA @ np.swapaxes(LA, -1, -2)


def wishart_scale_chol(rate: np.ndarray) -> np.ndarray:
    """chol(inv(rate)/2) for (stacked) rate matrices, symmetrized."""
    V = symmetrize(np.linalg.inv(rate)) * 0.5
    return np.linalg.cholesky(V)


def sample_wishart(shape: float, rate, rng: np.random.Generator) -> np.ndarray:
    """W(shape, rate) draw with E(X) = shape * inv(rate); see module docs."""
    rate = np.asarray(rate, dtype=float)
    r = rate.shape[-1]
    if shape <= (r - 1) / 2:
        raise InvalidShape(
            f"Wishart shape {shape} <= (r-1)/2 = {(r - 1) / 2}; density improper")
    cholesky(rate)  # validates symmetry/positive definiteness
    X = wishart_bartlett(shape, wishart_scale_chol(rate), rng)
    return symmetrize(X)


# ---------------------------------------------------------------------------
# generalized inverse Gaussian
# ---------------------------------------------------------------------------
#
# Density: f(x) ∝ x**(p-1) * exp(-(a*x + b/x)/2), x > 0.
# Sampling follows the ratio-of-uniforms family of Hörmann & Leydold (2014)
# on the two-parameter form z**(lam-1) * exp(-omega*(z+1/z)/2) with
# omega = sqrt(a*b) and x = sqrt(b/a) * z, vectorized over parameter arrays.

def _gig_logq(x, lam, omega):
    # log quasi-density of the two-parameter form; -inf outside (0, inf).
    # x, lam and omega share one shape.
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, -np.inf)
    ok = x > 0
    if np.any(ok):
        xs = x[ok]
        lam_ = np.asarray(lam)[ok]
        om_ = np.asarray(omega)[ok]
        out[ok] = (lam_ - 1.0) * np.log(xs) - 0.5 * om_ * (xs + 1.0 / xs)
    return out


def _gig_mode(lam, omega):
    # stable for both small and large lam
    return np.where(
        lam < 1.0,
        omega / (np.sqrt((1.0 - lam) ** 2 + omega ** 2) + (1.0 - lam)),
        (np.sqrt((lam - 1.0) ** 2 + omega ** 2) + (lam - 1.0)) / omega,
    )


def _rejection_rounds(n, propose_accept, rng):
    # propose_accept(idx, rng) -> (candidates, accept_mask) for pending idx
    out = np.empty(n)
    pending = np.arange(n)
    for _ in range(_MAX_REJECTION_ROUNDS):
        cand, ok = propose_accept(pending, rng)
        out[pending[ok]] = cand[ok]
        pending = pending[~ok]
        if pending.size == 0:
            return out
    raise RuntimeError("GIG rejection sampler failed to accept; "
                       "parameters out of supported numeric range")


def _gig_rou_shift(lam, omega, rng):
    # ratio of uniforms with mode shift; efficient for lam >= 1 or omega > 1
    m = _gig_mode(lam, omega)
    a2 = -2.0 * (lam + 1.0) / omega - m
    a1 = 2.0 * m * (lam - 1.0) / omega - 1.0
    # stationary points of (x-m)^2 q(x): real roots of x^3 + a2 x^2 + a1 x + m
    p1 = np.minimum(a1 - a2 ** 2 / 3.0, -1e-300)
    q1 = 2.0 * a2 ** 3 / 27.0 - a2 * a1 / 3.0 + m
    phi = np.arccos(np.clip(-0.5 * q1 * np.sqrt(-27.0 / p1 ** 3), -1.0, 1.0))
    s = np.sqrt(-p1 / 3.0)
    roots = np.stack([2.0 * s * np.cos(phi / 3.0 - 2.0 * np.pi * k / 3.0)
                      - a2 / 3.0 for k in range(3)])
    # exactly one root lies in (0, m) and one in (m, inf)
    left = np.where((roots > 0) & (roots < m), roots, -np.inf).max(axis=0)
    right = np.where(roots > m, roots, np.inf).min(axis=0)
    lqm = _gig_logq(m, lam, omega)
    vmin = (left - m) * np.exp(0.5 * (_gig_logq(left, lam, omega) - lqm))
    vmax = (right - m) * np.exp(0.5 * (_gig_logq(right, lam, omega) - lqm))
    # if the left stationary point rounds out of (0, m), its envelope height
    # is numerically zero, so the exact lower bound collapses to 0
    vmin = np.where(np.isfinite(vmin), vmin, 0.0)

    def propose(idx, rng):
        u = rng.random(idx.size)
        v = vmin[idx] + (vmax[idx] - vmin[idx]) * rng.random(idx.size)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = v / u + m[idx]
            ok = np.isfinite(x) & (x > 0)
            ok &= 2.0 * np.log(u) <= _gig_logq(x, lam[idx], omega[idx]) - lqm[idx]
        return x, ok

    return _rejection_rounds(lam.size, propose, rng)


def _gig_rou_noshift(lam, omega, rng):
    # plain ratio of uniforms; used for omega >= min(1/2, 2 sqrt(1-lam)/3)
    m = _gig_mode(lam, omega)
    umax = np.exp(0.5 * _gig_logq(m, lam, omega))
    xplus = ((1.0 + lam) + np.sqrt((1.0 + lam) ** 2 + omega ** 2)) / omega
    vmax = xplus * np.exp(0.5 * _gig_logq(xplus, lam, omega))

    def propose(idx, rng):
        u = umax[idx] * rng.random(idx.size)
        v = vmax[idx] * rng.random(idx.size)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = v / u
            ok = np.isfinite(x) & (x > 0)
            ok &= 2.0 * np.log(u) <= _gig_logq(x, lam[idx], omega[idx])
        return x, ok

    return _rejection_rounds(lam.size, propose, rng)


def _gig_hl_small(lam, omega, rng):
    # three-region rejection of Hörmann & Leydold (2014) for 0 <= lam < 1 and
    # small omega; envelope constants are normalized by q(mode) so the method
    # stays in range for extreme omega.  Rejection constant < 2.73.
    m = _gig_mode(lam, omega)
    lqm = _gig_logq(m, lam, omega)
    x0 = omega / (1.0 - lam)
    xs = np.maximum(x0, 2.0 / omega)
    A1 = x0  # k1 = q(m)/q(m) = 1 on (0, x0)
    k2 = np.exp(-omega - lqm)
    with np.errstate(divide="ignore", invalid="ignore"):
        A2 = np.where(
            x0 < 2.0 / omega,
            np.where(lam > 0,
                     k2 * ((2.0 / omega) ** lam - x0 ** lam) / np.where(lam > 0, lam, 1.0),
                     k2 * np.log(2.0 / omega ** 2)),
            0.0)
    k3 = np.exp((lam - 1.0) * np.log(xs) - lqm)
    A3 = 2.0 * k3 * np.exp(-xs * omega / 2.0) / omega
    A = A1 + A2 + A3

    def propose(idx, rng):
        lam_, om_, lqm_ = lam[idx], omega[idx], lqm[idx]
        u = rng.random(idx.size)
        v = A[idx] * rng.random(idx.size)
        x = np.empty(idx.size)
        logh = np.empty(idx.size)
        c1 = v <= A1[idx]
        c2 = ~c1 & (v <= A1[idx] + A2[idx])
        c3 = ~(c1 | c2)
        x[c1] = x0[idx][c1] * v[c1] / A1[idx][c1]
        logh[c1] = 0.0
        if np.any(c2):
            l2 = lam_[c2]
            w = v[c2] - A1[idx][c2]
            x0c, k2c = x0[idx][c2], k2[idx][c2]
            lp = np.where(l2 > 0, l2, 1.0)  # dummy exponent where lam == 0
            x2 = np.where(l2 > 0,
                          (x0c ** lp + w * lp / k2c) ** (1.0 / lp),
                          x0c * np.exp(w / k2c))
            x[c2] = x2
            logh[c2] = np.log(k2c) + (l2 - 1.0) * np.log(x2)
        if np.any(c3):
            w = v[c3] - A1[idx][c3] - A2[idx][c3]
            z = np.exp(-xs[idx][c3] * om_[c3] / 2.0) - om_[c3] * w / (2.0 * k3[idx][c3])
            x3 = -2.0 / om_[c3] * np.log(z)
            x[c3] = x3
            logh[c3] = np.log(k3[idx][c3]) - x3 * om_[c3] / 2.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = np.isfinite(x) & (x > 0)
            ok &= np.log(u) + logh <= _gig_logq(x, lam_, om_) - lqm_
        return x, ok

    return _rejection_rounds(lam.size, propose, rng)


def _gig_two_param(lam: np.ndarray, omega: np.ndarray,
                   rng: np.random.Generator) -> np.ndarray:
    out = np.empty(lam.shape)
    neg = lam < 0
    lam = np.abs(lam)
    shift = (lam >= 1.0) | (omega > 1.0)
    noshift = ~shift & (omega >= np.minimum(
        0.5, 2.0 / 3.0 * np.sqrt(np.maximum(1.0 - lam, 0.0))))
    small = ~shift & ~noshift
    for mask, fn in ((shift, _gig_rou_shift), (noshift, _gig_rou_noshift),
                     (small, _gig_hl_small)):
        if np.any(mask):
            out[mask] = fn(lam[mask], omega[mask], rng)
    out[neg] = 1.0 / out[neg]
    return out


def sample_gig(p, a, b, rng: np.random.Generator, size=None):
    """GIG draw(s) with density proportional to ``x**(p-1) exp(-(ax+b/x)/2)``.

    Parameters broadcast against each other; with scalar parameters ``size``
    gives the number of iid draws.  ``b == 0`` falls back to the exact
    Gamma(p, a/2) limit when ``p > 0`` and raises otherwise; very small
    ``sqrt(a*b)`` with ``|p| >= 1`` likewise routes to the gamma or
    inverse-gamma limit law (total variation error below 1e-10).
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(p)) or not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
        raise InvalidParams("GIG parameters must be finite")
    if np.any(a <= 0):
        raise InvalidParams(f"GIG parameter a must be positive, got {a}")
    if np.any(b < 0):
        raise InvalidParams(f"GIG parameter b must be nonnegative, got {b}")
    if np.any((b == 0) & (p <= 0)):
        raise InvalidParams("GIG with b = 0 requires p > 0 (gamma limit)")
    shape = np.broadcast_shapes(p.shape, a.shape, b.shape)
    if size is not None:
        shape = (size,) + shape
    p = np.broadcast_to(p, shape).ravel()
    a = np.broadcast_to(a, shape).ravel()
    b = np.broadcast_to(b, shape).ravel()

    omega = np.sqrt(a * b)
    out = np.empty(p.size)
    gam = (omega < _GIG_OMEGA_FLOOR) & (p >= 1.0) | (b == 0)
    igam = (omega < _GIG_OMEGA_FLOOR) & (p <= -1.0)
    rest = ~gam & ~igam
    if np.any(gam):
        out[gam] = rng.gamma(p[gam], scale=2.0 / a[gam])
    if np.any(igam):
        out[igam] = 1.0 / rng.gamma(-p[igam], scale=2.0 / b[igam])
    if np.any(rest):
        z = _gig_two_param(p[rest], omega[rest], rng)
        out[rest] = np.sqrt(b[rest] / a[rest]) * z
    out = out.reshape(shape)
    if out.shape == ():
        return float(out)
    return out
