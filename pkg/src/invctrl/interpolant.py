"""Minimal-norm kernel interpolation of the inverse model.

Given training pairs ``(x_i, u_i)`` and a strictly positive definite kernel,
the minimal-RKHS-norm interpolant has the closed form
``chat(x) = k(x)^T K^{-1} u`` where ``K`` is the Gram matrix of the training
features and ``k(x)_i = k(x_i, x)``.  A ridge term ``lam > 0`` replaces
``K^{-1}`` by ``(K + lam I)^{-1}`` for noise-corrupted data.

The solve is a symmetric positive definite Cholesky factorization.  If the
factorization fails (near-duplicate rows, very smooth kernels), a diagonal
jitter of ``1e-12 * kbar(0)`` is added and escalated by factors of 10 up to
``1e-6 * kbar(0)``; past that the fit fails with condition diagnostics.  The
jitter actually applied is recorded on the fitted model.

Diagnostics:

* ``rkhs_norm()`` returns ``sqrt(u^T K^{-1} u)``, a lower bound on the RKHS
  norm of any interpolant of the data.  (Some presentations write the
  squared quantity ``u^T K^{-1} u`` for the norm itself; the square root is
  the value with the right units and is what this module returns.)
* ``power(x)`` returns ``sqrt(k(x,x) - k(x)^T K^{-1} k(x))``, clamped at 0,
  the classical pointwise error multiplier.  Both require ``lam == 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kernels import ArdMatern52Kernel, make_kernel
from .narx import FLOAT_FMT, NarxDataset

__all__ = [
    "Interpolant",
    "FitError",
    "fit_interpolant",
    "select_hyperparameters",
    "dump_interpolant",
    "load_interpolant",
]

JITTER_BASE = 1e-12
JITTER_MAX = 1e-6


class FitError(RuntimeError):
    """SPD factorization failed even after maximum jitter escalation."""


def _signal_variance(kernel):
    return float(kernel.sigma_f) ** 2


def _factor(K, lam, sf2):
    """Cholesky of K + lam*I with escalating jitter; returns (factor, jitter)."""
    N = K.shape[0]
    A = K if lam == 0 else K + lam * np.eye(N)
    jitter = 0.0
    while True:
        try:
            M = A if jitter == 0 else A + jitter * np.eye(N)
            return cho_factor(M, lower=True), jitter
        except np.linalg.LinAlgError:
            jitter = JITTER_BASE * sf2 if jitter == 0 else jitter * 10.0
            if jitter > JITTER_MAX * sf2 * (1 + 1e-12):
                w = np.linalg.eigvalsh(A)
                raise FitError(
                    "SPD factorization failed at maximum jitter "
                    f"{JITTER_MAX * sf2:.3e}; eigenvalue range "
                    f"[{w[0]:.3e}, {w[-1]:.3e}], estimated condition "
                    f"{abs(w[-1] / w[0]) if w[0] != 0 else math.inf:.3e}"
                ) from None


@dataclass
class Interpolant:
    """Fitted inverse-model estimate; immutable after fit, safe for
    concurrent prediction."""

    kernel: object
    train_x: np.ndarray     # (N, d)
    train_u: np.ndarray     # (N,)
    alpha: np.ndarray       # (N,) solves (K + lam I) alpha = u
    lam: float
    jitter: float
    _chol: object = None    # cached factor of K + lam I + jitter I

    def __len__(self):
        return self.train_x.shape[0]

    def predict(self, x):
        """chat(x) = k(x)^T alpha; x is one point (d,) or a batch (M, d)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        kx = self.kernel.cross(np.atleast_2d(x), self.train_x)
        out = kx @ self.alpha
        return float(out[0]) if single else out

    def rkhs_norm(self):
        """sqrt(u^T K^{-1} u); defined for exact interpolation only."""
        if self.lam != 0:
            raise ValueError("RKHS norm estimate is undefined for lam > 0")
        return float(np.sqrt(max(0.0, float(self.train_u @ self.alpha))))

    def power(self, x):
        """Pointwise error multiplier sqrt(k(x,x) - k(x)^T K^{-1} k(x)) >= 0."""
        if self.lam != 0:
            raise ValueError("power function is undefined for lam > 0")
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        kx = self.kernel.cross(self.train_x, pts)  # (N, M)
        sol = cho_solve(self._chol, kx)
        diag = np.array([self.kernel(p, p) for p in pts])
        val = np.sqrt(np.maximum(0.0, diag - np.sum(kx * sol, axis=0)))
        return float(val[0]) if single else val


def fit_interpolant(kernel, dataset: NarxDataset, lam: float = 0.0) -> Interpolant:
    """Fit the minimal-norm interpolant (lam = 0) or its ridge variant."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if lam < 0:
        raise ValueError("lam must be >= 0")
    X = dataset.features
    u = dataset.controls
    K = kernel.gram(X)
    chol, jitter = _factor(K, lam, _signal_variance(kernel))
    alpha = cho_solve(chol, u)
    return Interpolant(kernel=kernel, train_x=X.copy(), train_u=u.copy(),
                       alpha=alpha, lam=float(lam), jitter=jitter, _chol=chol)


def loo_log_density(kernel, X, u, lam):
    """Leave-one-out log predictive density of the (ridge) interpolant.

    Uses the closed form from the inverse Gram matrix: with C = (K+lam I)^{-1}
    the LOO residual at i is alpha_i / C_ii and the LOO variance 1 / C_ii.
    """
    K = kernel.gram(X)
    chol, _ = _factor(K, lam, _signal_variance(kernel))
    N = len(u)
    Cinv = cho_solve(chol, np.eye(N))
    diag = np.diag(Cinv)
    alpha = Cinv @ u
    resid = alpha / diag
    var = 1.0 / diag
    return float(np.sum(-0.5 * np.log(2.0 * np.pi * var) - resid**2 / (2.0 * var)))


def select_hyperparameters(candidates, dataset: NarxDataset, lam: float = 0.0):
    """Pick the kernel from ``candidates`` maximizing the leave-one-out log
    predictive density at fixed ``lam``.  Deterministic: ties broken by the
    candidate's parameter tuple, so a permuted grid selects the same kernel.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("empty hyperparameter grid")

    def params(k):
        if isinstance(k, ArdMatern52Kernel):
            return (k.sigma_f,) + tuple(k.sigma_l)
        return (k.sigma_f, k.sigma_l)

    best = None
    for cand in candidates:
        score = loo_log_density(cand, dataset.features, dataset.controls, lam)
        key = (score, tuple(-p for p in params(cand)))
        if best is None or key > best[0]:
            best = (key, cand)
    return best[1]


def dump_interpolant(path, model: Interpolant):
    """Full-precision text dump sufficient to reload without refitting.

    Header lines are ``key = value``; then one row per training point with
    the feature coordinates and the weight ``alpha_i``.
    """
    k = model.kernel
    if isinstance(k, ArdMatern52Kernel):
        family = "ard_matern52"
        sl = ",".join(format(v, FLOAT_FMT) for v in k.sigma_l)
    else:
        family = k.family
        sl = format(k.sigma_l, FLOAT_FMT)
    lines = [
        f"family = {family}",
        f"sigma_f = {format(k.sigma_f, FLOAT_FMT)}",
        f"sigma_l = {sl}",
        f"lambda = {format(model.lam, FLOAT_FMT)}",
        f"jitter = {format(model.jitter, FLOAT_FMT)}",
        f"N = {len(model)}",
        f"dim = {model.train_x.shape[1]}",
        "columns = x..., u, alpha",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
        for xi, ui, ai in zip(model.train_x, model.train_u, model.alpha):
            row = [format(v, FLOAT_FMT) for v in xi]
            row.append(format(ui, FLOAT_FMT))
            row.append(format(ai, FLOAT_FMT))
            fh.write(",".join(row) + "\n")


def load_interpolant(path) -> Interpolant:
    """Reload a dumped model; the factorization is rebuilt only if a
    diagnostic (power function) is requested later."""
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if "=" in line and not line[0].isdigit() and not line.startswith("-"):
                key, _, val = line.partition("=")
                meta[key.strip()] = val.strip()
            else:
                rows.append([float(v) for v in line.split(",")])
    kernel = make_kernel(
        meta["family"], float(meta["sigma_f"]),
        [float(v) for v in meta["sigma_l"].split(",")],
    )
    data = np.array(rows)
    dim = int(meta["dim"])
    X = data[:, :dim]
    u = data[:, dim]
    alpha = data[:, dim + 1]
    lam = float(meta["lambda"])
    jitter = float(meta["jitter"])
    K = kernel.gram(X)
    N = len(u)
    chol = cho_factor(K + (lam + jitter) * np.eye(N), lower=True)
    return Interpolant(kernel=kernel, train_x=X, train_u=u, alpha=alpha,
                       lam=lam, jitter=jitter, _chol=chol)
