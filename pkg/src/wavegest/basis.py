"""Complex exponential basis and least-squares weight fitting.

A trajectory of ``T`` samples is approximated by ``2K`` conjugate complex
exponentials plus an offset,

    y[t] = sum_{k=-K..K} w_k exp(i 2 pi k t / T),   t = 0 .. T-1.

With this time index the basis columns are exactly orthogonal
(``Phi^H Phi = T I``), so the least-squares weights are the projection
``Phi^H y / T``. Multiple joints share ``Phi``: the Kronecker system
``Phi (x) I_D`` decouples into ``D`` independent per-joint solves, and is
never built.
"""
from dataclasses import dataclass

import numpy as np

from .dataset_io import Demonstration


def harmonics(K):
    """Harmonic indices ``-K..K`` in column order."""
    return np.arange(-K, K + 1)


def _check_TK(T, K):
    if int(T) != T or T < 2:
        raise ValueError(f"sample count T must be an integer >= 2, got {T}")
    if int(K) != K or K < 0:
        raise ValueError(f"harmonic count K must be an integer >= 0, got {K}")
    if 2 * K + 1 > T:
        raise ValueError(
            f"2K+1 = {2 * K + 1} basis functions exceed T = {T} samples; "
            "the system would be underdetermined")


def build_basis(T, K):
    """Basis matrix with entry ``(t, j) = exp(i 2 pi t k_j / T)``.

    Parameters
    ----------
    T : int
        Number of samples, time index ``t = 0 .. T-1``.

    K : int
        Highest harmonic. Columns are ordered ``k = -K .. K``.

    Returns
    -------
    Phi : array, shape (T, 2K+1), complex
    """
    _check_TK(T, K)
    return _basis_at_phase(np.arange(T) / T, K, exact_grid=T)


def _basis_at_phase(phase, K, exact_grid=None):
    """Basis evaluated at arbitrary phases (fractions of one period).

    When the phases are ``t / exact_grid`` for integer ``t``, the angle is
    reduced modulo the period with integer arithmetic first, so columns
    stay exactly conjugate and orthogonal.
    """
    phase = np.asarray(phase, dtype=float)
    k = np.arange(1, K + 1)
    if exact_grid is not None:
        t = np.rint(phase * exact_grid).astype(np.int64)
        angle = 2.0 * np.pi * ((np.outer(t, k) % exact_grid) / exact_grid)
    else:
        angle = 2.0 * np.pi * np.outer(phase, k)
    positive = np.exp(1j * angle)
    return np.hstack([np.conj(positive[:, ::-1]),
                      np.ones((len(phase), 1), dtype=complex),
                      positive])


@dataclass(frozen=True)
class ComplexWeights:
    """Per-joint Fourier weights for harmonics ``-K..K``.

    Parameters
    ----------
    coeffs : array, shape (D, 2K+1), complex
        Row ``d`` holds the weights of joint ``d``; column ``j`` belongs to
        harmonic ``j - K``.

    duration : float
        Length in seconds of one basis period.
    """
    coeffs: np.ndarray
    duration: float = 1.0

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.ndim == 1:
            coeffs = coeffs[np.newaxis, :]
        if coeffs.ndim != 2 or coeffs.shape[1] % 2 != 1:
            raise ValueError(
                f"coeffs must have shape (D, 2K+1), got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coeffs contain non-finite values")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "duration", float(self.duration))

    @property
    def D(self):
        return self.coeffs.shape[0]

    @property
    def K(self):
        return (self.coeffs.shape[1] - 1) // 2

    def at(self, k):
        """Weights of harmonic ``k`` for every joint, shape (D,)."""
        if abs(k) > self.K:
            raise IndexError(f"harmonic {k} outside -{self.K}..{self.K}")
        return self.coeffs[:, k + self.K]

    def symmetry_error(self):
        """Largest ``|w_k - conj(w_-k)|`` over all joints and harmonics."""
        return float(np.max(np.abs(self.coeffs - np.conj(self.coeffs[:, ::-1]))))


def fit_weights(demo, K):
    """Least-squares Fourier weights of every joint of ``demo``.

    ``demo`` may be a :class:`Demonstration` or a raw ``(T, D)`` array; for
    raw arrays the returned duration is ``T`` (unit sampling interval).
    """
    if isinstance(demo, Demonstration):
        y, duration = demo.samples, demo.duration
    else:
        y = np.asarray(demo, dtype=float)
        if y.ndim == 1:
            y = y[:, np.newaxis]
        duration = float(y.shape[0])
    if not np.all(np.isfinite(y)):
        raise ValueError("trajectory contains non-finite values")
    T = y.shape[0]
    Phi = build_basis(T, K)
    coeffs = (Phi.conj().T @ y).T / T
    return ComplexWeights(coeffs, duration)


def evaluate(weights, phase):
    """Complex trajectory ``Phi(phase) w`` before discarding the imaginary part.

    Parameters
    ----------
    weights : ComplexWeights

    phase : array, shape (n,)
        Sample positions as fractions of one basis period.

    Returns
    -------
    y : array, shape (n, D), complex
    """
    return _basis_at_phase(phase, weights.K) @ weights.coeffs.T


def reconstruct(weights, T_out, return_imag=False):
    """Real ``(T_out, D)`` trajectory spanning one basis period.

    With ``return_imag`` the largest discarded imaginary magnitude is also
    returned; it is at rounding level whenever the weights are conjugate
    symmetric.
    """
    if int(T_out) != T_out or T_out < 2:
        raise ValueError(f"T_out must be an integer >= 2, got {T_out}")
    T_out = int(T_out)
    Phi = _basis_at_phase(np.arange(T_out) / T_out, weights.K,
                          exact_grid=T_out)
    y = Phi @ weights.coeffs.T
    if return_imag:
        return y.real.copy(), float(np.max(np.abs(y.imag)))
    return y.real.copy()
