"""Gaussian-process surrogate (squared-exponential kernel) and expected improvement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.stats import norm

from ..errors import ConfigurationError

LENGTH_SCALES = (0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0)
SIGNAL_VARIANCES = (0.25, 0.5, 1.0, 2.0, 4.0)
NOISE_FLOOR = 1e-6


def rbf(a: np.ndarray, b: np.ndarray, length_scale: float, signal_var: float) -> np.ndarray:
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)
    return signal_var * np.exp(-0.5 * d2 / length_scale ** 2)


@dataclass
class GpModel:
    """GP regression on standardised targets with hyperparameters picked by
    log marginal likelihood over a fixed grid."""

    noise_var: float = NOISE_FLOOR
    length_scales: Sequence[float] = LENGTH_SCALES
    signal_variances: Sequence[float] = SIGNAL_VARIANCES
    length_scale: float = field(init=False, default=np.nan)
    signal_var: float = field(init=False, default=np.nan)
    log_marginal_likelihood: float = field(init=False, default=-np.inf)

    def fit(self, x, y, length_scale: Optional[float] = None,
            signal_var: Optional[float] = None) -> "GpModel":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if len(x) != len(y) or len(y) == 0:
            raise ConfigurationError("GP needs at least one training point with matching x and y")
        if not np.all(np.isfinite(y)):
            raise ConfigurationError("GP targets must be finite")
        self.x = x
        self.y_mean = float(y.mean())
        self.y_std = float(y.std()) if y.std() > 0 else 1.0
        z = (y - self.y_mean) / self.y_std
        ls_grid = [length_scale] if length_scale is not None else list(self.length_scales)
        sv_grid = [signal_var] if signal_var is not None else list(self.signal_variances)
        best = None
        for ls in ls_grid:
            for sv in sv_grid:
                k = rbf(x, x, ls, sv) + self.noise_var * np.eye(len(x))
                try:
                    c = cho_factor(k, lower=True)
                except np.linalg.LinAlgError:
                    continue
                alpha = cho_solve(c, z)
                lml = (-0.5 * z @ alpha - np.log(np.diag(c[0])).sum()
                       - 0.5 * len(z) * np.log(2 * np.pi))
                if best is None or lml > best[0] + 1e-12:
                    best = (lml, ls, sv, c, alpha)
        if best is None:
            raise ConfigurationError("GP fit failed for every hyperparameter setting")
        self.log_marginal_likelihood, self.length_scale, self.signal_var, self._chol, self._alpha = best
        return self

    def predict(self, xq) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation in the original target units."""
        xq = np.atleast_2d(np.asarray(xq, dtype=float))
        ks = rbf(xq, self.x, self.length_scale, self.signal_var)
        mu = ks @ self._alpha
        v = cho_solve(self._chol, ks.T)
        var = np.maximum(self.signal_var - np.einsum("ij,ji->i", ks, v), 0.0)
        return mu * self.y_std + self.y_mean, np.sqrt(var) * self.y_std

    @property
    def prior_variance(self) -> float:
        return self.signal_var * self.y_std ** 2


def expected_improvement(mu, sigma, f_best: float) -> np.ndarray:
    """EI for minimisation; reduces to max(f_best - mu, 0) where sigma = 0."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    imp = f_best - mu
    out = np.maximum(imp, 0.0)
    pos = sigma > 0
    with np.errstate(over="ignore"):
        g = np.where(pos, imp / np.where(pos, sigma, 1.0), 0.0)
    # cdf/pdf are saturated beyond |g| = 40; clipping only avoids overflow
    g = np.clip(g, -40.0, 40.0)
    ei = sigma * (g * norm.cdf(g) + norm.pdf(g))
    out = np.where(pos & (g >= 40.0), np.maximum(imp, 0.0), np.where(pos, np.maximum(ei, 0.0), out))
    return out if out.ndim else float(out)


def gp_expected_improvement(gp: GpModel, x, f_best: float) -> np.ndarray:
    mu, sd = gp.predict(x)
    return expected_improvement(mu, sd, f_best)
