"""Trial profiles projected onto the sine basis."""

from __future__ import annotations

import numpy as np

from ..kernels import cutoff_bubble
from ..spectral import SpectralBasis, SpectralFunction

__all__ = ["fine_points", "centered_bubble", "random_positive"]


def fine_points(basis: SpectralBasis) -> np.ndarray:
    """Fine quadrature nodes as an array of shape ``fine_grid + (N,)``."""
    axes = basis.domain.nodes(basis.fine_grid)
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def centered_bubble(basis: SpectralBasis, eps: float, alpha: float, center=None) -> SpectralFunction:
    """Cutoff bubble concentrated at ``center`` (default: box center), projected."""
    lengths = np.asarray(basis.domain.lengths)
    center = lengths / 2 if center is None else np.asarray(center, dtype=float)
    radius = 0.95 * float(np.min(np.minimum(center, lengths - center)))
    eta = cutoff_bubble(eps, alpha, basis.dim, r=radius)
    x = fine_points(basis) - center
    vals = eta(x.reshape(-1, basis.dim)).reshape(basis.fine_grid)
    return SpectralFunction(basis, basis.from_fine(vals))


def random_positive(basis: SpectralBasis, rng: np.random.Generator, amplitude: float,
                    n_low: int = 4) -> SpectralFunction:
    """``amplitude * phi_1-like envelope * exp(smooth random field)``, projected."""
    x = fine_points(basis)
    lengths = np.asarray(basis.domain.lengths)
    env = np.prod(np.sin(np.pi * x / lengths), axis=-1)
    field = np.zeros(basis.fine_grid)
    for axis in range(basis.dim):
        k = np.arange(1, n_low + 1)
        c = rng.standard_normal(n_low) / k
        field = field + np.cos(np.pi * x[..., axis, None] * k / lengths[axis]) @ c
    vals = amplitude * env * np.exp(0.5 * field)
    return SpectralFunction(basis, basis.from_fine(vals))
