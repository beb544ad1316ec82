"""Dirichlet sine basis on boxes and the diagonal fractional Laplacian.

A function on the box ``(0, L_1) x ... x (0, L_N)`` is stored as the
coefficient vector ``a`` of its expansion in the L2-orthonormal Dirichlet
eigenfunctions

    phi_k(x) = prod_i sqrt(2 / L_i) sin(k_i pi x_i / L_i),
    rho_k    = sum_i (k_i pi / L_i)**2,

ordered by ascending ``rho`` (ties broken by lexicographic wavenumber).
Nodal values live on the equispaced interior grid ``x_j = j L / (n + 1)``,
``j = 1..n``, where the type-I discrete sine transform is an exact
collocation map.  Nonlinear integrands are evaluated on a grid refined by
``oversample`` to limit aliasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft

__all__ = [
    "AliasingError",
    "Domain",
    "SpectralBasis",
    "SpectralFunction",
    "build_basis",
    "analyze",
    "synthesize",
    "evaluate",
    "apply_frac",
    "solve_shifted",
    "norm_hs",
    "first_eigenpair",
    "crit_exponent",
]


class AliasingError(ValueError):
    """Requested more modes than the nodal grid can represent."""


def _as_tuple(value, dim, name):
    if np.isscalar(value):
        return (value,) * dim
    value = tuple(value)
    if len(value) != dim:
        raise ValueError(f"{name} must have {dim} entries, got {len(value)}")
    return value


@dataclass(frozen=True)
class Domain:
    """Box ``prod_i (0, lengths[i])`` sampled on ``grid[i]`` interior nodes."""

    lengths: tuple
    grid: tuple

    def __post_init__(self):
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        grid = tuple(int(v) for v in np.atleast_1d(self.grid))
        if len(grid) == 1 and len(lengths) > 1:
            grid = grid * len(lengths)
        if len(lengths) not in (1, 2):
            raise ValueError("only intervals and rectangles are supported")
        if len(grid) != len(lengths):
            raise ValueError("grid and lengths disagree in dimension")
        if any(v <= 0 for v in lengths):
            raise ValueError("box lengths must be positive")
        if any(v < 1 for v in grid):
            raise ValueError("grid must have at least one node per axis")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "grid", grid)

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @classmethod
    def box(cls, dim: int, length: float = np.pi, grid: int = 32) -> "Domain":
        return cls((length,) * dim, (grid,) * dim)

    def nodes(self, counts=None):
        """Per-axis interior node coordinates for ``counts`` (default: ``grid``)."""
        counts = self.grid if counts is None else _as_tuple(counts, self.dim, "counts")
        return [L * np.arange(1, n + 1) / (n + 1) for L, n in zip(self.lengths, counts)]

    def cell_volume(self, counts=None) -> float:
        counts = self.grid if counts is None else _as_tuple(counts, self.dim, "counts")
        return float(np.prod([L / (n + 1) for L, n in zip(self.lengths, counts)]))


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    domain: Domain
    modes: tuple
    oversample: int = 4
    # filled in __post_init__
    wavenumbers: np.ndarray = field(init=False, repr=False)
    rho: np.ndarray = field(init=False, repr=False)
    normalization: str = field(init=False, default="L2")

    def __post_init__(self):
        modes = tuple(int(m) for m in _as_tuple(self.modes, self.domain.dim, "modes"))
        object.__setattr__(self, "modes", modes)
        grids = np.meshgrid(*[np.arange(1, m + 1) for m in modes], indexing="ij")
        lex = np.stack([g.ravel() for g in grids], axis=1)
        rho = np.zeros(len(lex))
        for axis, L in enumerate(self.domain.lengths):
            rho = rho + (lex[:, axis] * np.pi / L) ** 2
        order = np.argsort(rho, kind="stable")
        k = lex[order]
        k.setflags(write=False)
        rho = rho[order]
        rho.setflags(write=False)
        object.__setattr__(self, "wavenumbers", k)
        object.__setattr__(self, "rho", rho)

    @property
    def size(self) -> int:
        return len(self.rho)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def fine_grid(self) -> tuple:
        return tuple(self.oversample * (n + 1) - 1 for n in self.domain.grid)

    # tensor <-> flat coefficient layout

    def to_tensor(self, coeffs: np.ndarray, shape=None) -> np.ndarray:
        """Scatter flat coefficients into a zero-padded wavenumber tensor."""
        shape = self.modes if shape is None else tuple(shape)
        coeffs = np.asarray(coeffs)
        out = np.zeros(coeffs.shape[:-1] + shape, dtype=coeffs.dtype)
        idx = tuple(self.wavenumbers[:, a] - 1 for a in range(self.dim))
        out[(Ellipsis,) + idx] = coeffs
        return out

    def from_tensor(self, tensor: np.ndarray) -> np.ndarray:
        idx = tuple(self.wavenumbers[:, a] - 1 for a in range(self.dim))
        return tensor[(Ellipsis,) + idx]

    # transforms on an arbitrary DST grid

    def _axes(self, ndim_batch):
        return tuple(range(ndim_batch, ndim_batch + self.dim))

    def synth_grid(self, coeffs: np.ndarray, counts) -> np.ndarray:
        """Nodal values on the DST grid with ``counts`` nodes per axis.

        Leading axes of ``coeffs`` are treated as a batch.
        """
        counts = _as_tuple(counts, self.dim, "counts")
        if any(n < m for n, m in zip(counts, self.modes)):
            raise AliasingError(f"grid {counts} cannot carry modes {self.modes}")
        coeffs = np.asarray(coeffs, dtype=float)
        t = self.to_tensor(coeffs, counts)
        axes = self._axes(coeffs.ndim - 1)
        vals = scipy.fft.dstn(t, type=1, axes=axes)
        scale = np.prod([np.sqrt(2.0 / L) / 2.0 for L in self.domain.lengths])
        return vals * scale

    def analyze_grid(self, nodal: np.ndarray, counts=None) -> np.ndarray:
        """Discrete L2 projection of nodal values onto the retained modes."""
        nodal = np.asarray(nodal, dtype=float)
        counts = nodal.shape[nodal.ndim - self.dim:] if counts is None else counts
        counts = _as_tuple(counts, self.dim, "counts")
        if nodal.shape[nodal.ndim - self.dim:] != counts:
            raise ValueError(f"nodal shape {nodal.shape} does not match grid {counts}")
        if any(n < m for n, m in zip(counts, self.modes)):
            raise AliasingError(f"grid {counts} cannot resolve modes {self.modes}")
        axes = self._axes(nodal.ndim - self.dim)
        t = scipy.fft.dstn(nodal, type=1, axes=axes)
        scale = np.prod([np.sqrt(L / 2.0) / (n + 1) for L, n in zip(self.domain.lengths, counts)])
        sl = (Ellipsis,) + tuple(slice(0, m) for m in self.modes)
        return self.from_tensor(t[sl] * scale)

    # convenience on the fine quadrature grid

    def to_fine(self, coeffs: np.ndarray) -> np.ndarray:
        return self.synth_grid(coeffs, self.fine_grid)

    def from_fine(self, nodal: np.ndarray) -> np.ndarray:
        return self.analyze_grid(nodal, self.fine_grid)

    def integrate_fine(self, nodal: np.ndarray) -> float:
        """Composite trapezoid rule (zero boundary values) on the fine grid."""
        return float(np.sum(nodal) * self.domain.cell_volume(self.fine_grid))

    def axis_samples(self, counts) -> list:
        """Per-axis matrices ``S[i, k] = sqrt(h) phi_k(x_i)`` (1D factors)."""
        counts = _as_tuple(counts, self.dim, "counts")
        out = []
        for L, n, m in zip(self.domain.lengths, counts, self.modes):
            x = L * np.arange(1, n + 1) / (n + 1)
            h = L / (n + 1)
            k = np.arange(1, m + 1)
            out.append(np.sqrt(h) * np.sqrt(2.0 / L) * np.sin(np.outer(x, k) * np.pi / L))
        return out

    def lp_norm(self, coeffs: np.ndarray, p: float) -> float:
        vals = np.abs(self.to_fine(coeffs))
        return self.integrate_fine(vals**p) ** (1.0 / p)


@dataclass(eq=False)
class SpectralFunction:
    """``u = sum_j coeffs[j] phi_j`` on ``basis``."""

    basis: SpectralBasis
    coeffs: np.ndarray
    _nodal: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.basis.size,):
            raise ValueError(
                f"expected {self.basis.size} coefficients, got shape {self.coeffs.shape}"
            )

    @property
    def nodal(self) -> np.ndarray:
        if self._nodal is None:
            self._nodal = self.basis.synth_grid(self.coeffs, self.basis.domain.grid)
        return self._nodal

    def copy_with(self, coeffs) -> "SpectralFunction":
        return SpectralFunction(self.basis, coeffs)

    @classmethod
    def zeros(cls, basis: SpectralBasis) -> "SpectralFunction":
        return cls(basis, np.zeros(basis.size))

    @classmethod
    def mode(cls, basis: SpectralBasis, j: int) -> "SpectralFunction":
        """The ``j``-th basis function (0-based, in ``rho`` order)."""
        c = np.zeros(basis.size)
        c[j] = 1.0
        return cls(basis, c)

    def __add__(self, other):
        return self.copy_with(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self.copy_with(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self.copy_with(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self.copy_with(-self.coeffs)


def crit_exponent(dim: int, alpha: float) -> float:
    """Critical fractional Sobolev exponent ``2N / (N - alpha)``."""
    if not dim > alpha:
        raise ValueError(f"critical exponent needs N > alpha, got N={dim}, alpha={alpha}")
    return 2.0 * dim / (dim - alpha)


def build_basis(domain: Domain, modes, oversample: int = 4) -> SpectralBasis:
    """Dirichlet eigenbasis of ``-Laplace`` on ``domain`` with ``modes`` per axis.

    Raises
    ------
    AliasingError
        If some axis asks for more modes than it has grid nodes.
    """
    modes = _as_tuple(modes, domain.dim, "modes")
    if any(int(m) < 1 for m in modes):
        raise ValueError("need at least one mode per axis")
    if any(int(m) > n for m, n in zip(modes, domain.grid)):
        raise AliasingError(f"modes {modes} exceed grid {domain.grid}")
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    return SpectralBasis(domain, modes, oversample)


def analyze(nodal, basis: SpectralBasis) -> SpectralFunction:
    """Coefficients of the grid function ``nodal`` (type-I DST per axis)."""
    nodal = np.asarray(nodal, dtype=float)
    if nodal.shape != basis.domain.grid:
        raise ValueError(f"nodal shape {nodal.shape} != grid {basis.domain.grid}")
    return SpectralFunction(basis, basis.analyze_grid(nodal))


def synthesize(u: SpectralFunction, grid=None) -> np.ndarray:
    """Nodal values of ``u`` on its own grid or on a DST grid with ``grid`` nodes."""
    if grid is None:
        return u.nodal.copy()
    return u.basis.synth_grid(u.coeffs, grid)


def evaluate(u: SpectralFunction, points) -> np.ndarray:
    """Exact trigonometric evaluation of ``u`` at arbitrary points, shape ``(P, N)``."""
    basis = u.basis
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if basis.dim == 1 and pts.shape[0] == 1 and pts.shape[1] != 1:
        pts = pts.T
    vals = np.ones((pts.shape[0], basis.size))
    for axis, L in enumerate(basis.domain.lengths):
        k = basis.wavenumbers[:, axis]
        vals *= np.sqrt(2.0 / L) * np.sin(np.outer(pts[:, axis], k) * np.pi / L)
    return vals @ u.coeffs


def _check_alpha(alpha):
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")


def apply_frac(u: SpectralFunction, alpha: float) -> SpectralFunction:
    """``(-Laplace)^{alpha/2} u``: multiply coefficient ``j`` by ``rho_j**(alpha/2)``."""
    _check_alpha(alpha)
    return u.copy_with(u.coeffs * u.basis.rho ** (alpha / 2.0))


def solve_shifted(rhs: SpectralFunction, alpha: float, shift: float = 0.0) -> SpectralFunction:
    """Solve ``((-Laplace)^{alpha/2} + shift) b = rhs``; ``shift=0`` is the inverse."""
    if shift < 0:
        raise ValueError("shift must be nonnegative")
    return rhs.copy_with(rhs.coeffs / (rhs.basis.rho ** (alpha / 2.0) + shift))


def norm_hs(u: SpectralFunction, alpha: float) -> float:
    """``(sum_j a_j^2 rho_j^{alpha/2})^{1/2}``; ``alpha=0`` gives the L2 norm."""
    return float(np.sqrt(np.sum(u.coeffs**2 * u.basis.rho ** (alpha / 2.0))))


def first_eigenpair(basis: SpectralBasis, alpha: float):
    """``(lambda_1, phi_1)`` of the fractional operator, ``phi_1 > 0`` inside."""
    lam1 = float(basis.rho[0] ** (alpha / 2.0))
    return lam1, SpectralFunction.mode(basis, 0)
