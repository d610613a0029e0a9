"""Gaussian model over log-polar Fourier weights.

Each demonstration's weights are mapped to a flat real vector. Per joint
``d`` the block of ``2K+1`` entries is laid out as::

    [ dc(k=0) | ln|w_k|, k=1..K | Arg(w_k), k=1..K ]

Negative harmonics are implied by conjugate symmetry and are not modeled.
The offset is kept raw (it may take either sign), amplitudes in log space
and phases as angles unwrapped around a per-coordinate reference.
"""
import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.linalg

from .basis import ComplexWeights, fit_weights

SCHEMA_VERSION = 1
INDEX_LAYOUT = "dc,lnr[1..K],theta[1..K] per dof"
DEFAULT_EPS_R = 1e-8
DEFAULT_LAMBDA = 1e-6

DC, LOG_AMP, PHASE = "dc", "amp", "phase"
COMPONENTS = (DC, LOG_AMP, PHASE)


class AmplitudeFloorWarning(UserWarning):
    """A weight modulus was below the floor and got clamped before ``ln``."""


class ModelFormatError(ValueError):
    pass


def wrap_angle(a):
    """Wrap angles into the principal interval ``(-pi, pi]``."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


@dataclass(frozen=True)
class WeightIndexMap:
    """Bijection between flat vector positions and ``(dof, k, component)``."""
    D: int
    K: int

    @property
    def block(self):
        return 2 * self.K + 1

    @property
    def dim(self):
        return self.D * self.block

    def index(self, dof, k, component):
        if not 0 <= dof < self.D:
            raise IndexError(f"dof {dof} outside 0..{self.D - 1}")
        if component == DC:
            if k != 0:
                raise IndexError(f"dc coordinate has k=0, got k={k}")
            return dof * self.block
        if component not in (LOG_AMP, PHASE):
            raise ValueError(f"unknown component {component!r}")
        if not 1 <= k <= self.K:
            raise IndexError(f"harmonic {k} outside 1..{self.K}")
        offset = k if component == LOG_AMP else self.K + k
        return dof * self.block + offset

    def descriptor(self, i):
        if not 0 <= i < self.dim:
            raise IndexError(f"index {i} outside 0..{self.dim - 1}")
        dof, r = divmod(int(i), self.block)
        if r == 0:
            return dof, 0, DC
        if r <= self.K:
            return dof, r, LOG_AMP
        return dof, r - self.K, PHASE

    def component_indices(self, component):
        """Flat indices of one component for all joints, shape (D, K) or (D,)."""
        base = np.arange(self.D)[:, np.newaxis] * self.block
        if component == DC:
            return base[:, 0]
        k = np.arange(1, self.K + 1)
        return base + (k if component == LOG_AMP else self.K + k)


def to_logpolar(weights, eps_r=DEFAULT_EPS_R, tol=1e-9):
    """Flatten conjugate-symmetric weights into the log-polar vector.

    Moduli below ``eps_r`` are floored to ``eps_r`` (one
    :class:`AmplitudeFloorWarning` per call). An exactly zero weight gets
    phase 0.
    """
    K = weights.K
    scale = max(1.0, float(np.max(np.abs(weights.coeffs))))
    asym = weights.symmetry_error()
    if asym > tol * scale:
        raise ValueError(
            f"weights are not conjugate symmetric (max |w_k - conj(w_-k)| "
            f"= {asym:.3g})")
    positive = weights.coeffs[:, K + 1:]
    modulus = np.abs(positive)
    phase = np.where(modulus == 0, 0.0, np.angle(positive))
    phase = np.where(phase == -np.pi, np.pi, phase)
    low = modulus < eps_r
    if np.any(low):
        warnings.warn(
            f"{int(low.sum())} weight moduli below eps_r={eps_r:g} floored",
            AmplitudeFloorWarning, stacklevel=2)
        modulus = np.maximum(modulus, eps_r)
    x = np.hstack([weights.coeffs[:, K].real[:, np.newaxis],
                   np.log(modulus), phase])
    return x.reshape(-1)


def from_logpolar(x, K, duration=1.0):
    """Inverse of :func:`to_logpolar`; negative harmonics filled by conjugation."""
    x = np.asarray(x, dtype=float)
    block = 2 * K + 1
    if x.ndim != 1 or x.size % block:
        raise ValueError(
            f"vector of length {x.size} does not match K={K} "
            f"(block size {block})")
    if not np.all(np.isfinite(x)):
        raise ValueError("log-polar vector contains non-finite values")
    blocks = x.reshape(-1, block)
    positive = np.exp(blocks[:, 1:K + 1]) * np.exp(1j * blocks[:, K + 1:])
    coeffs = np.hstack([np.conj(positive[:, ::-1]),
                        blocks[:, :1].astype(complex), positive])
    return ComplexWeights(coeffs, duration)


def align_phases(vectors, K, phase_ref=None):
    """Unwrap every phase coordinate to lie within pi of a reference.

    The reference defaults to the per-coordinate circular mean over
    ``vectors``. Amplitude and offset entries are returned untouched.

    Returns
    -------
    aligned : list of arrays

    phase_ref : array, shape (D * K,)
        Reference angles, in joint-major order.
    """
    X = np.atleast_2d(np.asarray(vectors, dtype=float))
    imap = WeightIndexMap(X.shape[1] // (2 * K + 1), K)
    idx = imap.component_indices(PHASE).reshape(-1)
    theta = X[:, idx]
    if phase_ref is None:
        phase_ref = np.arctan2(np.sin(theta).sum(axis=0),
                               np.cos(theta).sum(axis=0))
    phase_ref = np.asarray(phase_ref, dtype=float)
    if phase_ref.shape != (idx.size,):
        raise ValueError(
            f"phase_ref has shape {phase_ref.shape}, expected ({idx.size},)")
    out = X.copy()
    out[:, idx] = phase_ref + wrap_angle(theta - phase_ref)
    return list(out), phase_ref


@dataclass(frozen=True)
class GestureModel:
    """Gaussian over log-polar weight vectors.

    ``sigma`` may have all-zero rows and columns for coordinates that were
    fixed by :func:`condition`.
    """
    mu: np.ndarray
    sigma: np.ndarray
    D: int
    K: int
    ref_duration: float
    lam: float = DEFAULT_LAMBDA
    phase_ref: np.ndarray = field(default=None)

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(-1)
        sigma = np.array(self.sigma, dtype=float)
        dim = self.D * (2 * self.K + 1)
        if mu.shape != (dim,) or sigma.shape != (dim, dim):
            raise ModelFormatError(
                f"mu {mu.shape} / sigma {sigma.shape} inconsistent with "
                f"D={self.D}, K={self.K} (dimension {dim})")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise ModelFormatError("model contains non-finite values")
        if np.max(np.abs(sigma - sigma.T), initial=0.0) > 1e-12 * max(
                1.0, float(np.max(np.abs(sigma), initial=0.0))):
            raise ModelFormatError("sigma is not symmetric")
        phase_ref = (np.zeros(self.D * self.K) if self.phase_ref is None
                     else np.array(self.phase_ref, dtype=float).reshape(-1))
        if phase_ref.shape != (self.D * self.K,):
            raise ModelFormatError(
                f"phase_ref has length {phase_ref.size}, expected "
                f"{self.D * self.K}")
        for a in (mu, sigma, phase_ref):
            a.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "phase_ref", phase_ref)

    @property
    def dim(self):
        return self.mu.size

    @property
    def index_map(self):
        return WeightIndexMap(self.D, self.K)


def _loading(sigma, lam):
    """Diagonal loading ``lam * trace / dim``, or plain ``lam`` if the trace is 0."""
    n = sigma.shape[0]
    tr = float(np.trace(sigma))
    return lam * (tr / n if tr > 0 else 1.0)


def fit_model(dataset, K, lam=DEFAULT_LAMBDA, eps_r=DEFAULT_EPS_R):
    """Fit the Gaussian gesture model to a dataset of demonstrations.

    Weights are fitted per demonstration (each with its own basis), turned
    into log-polar vectors and phase aligned; mean and covariance use the
    ``1/M`` normalization. The covariance is diagonally loaded by
    ``lam * trace(sigma) / dim``.
    """
    demos = list(dataset)
    if not demos:
        raise ValueError("dataset is empty")
    T_min = min(d.T for d in demos)
    if 2 * K + 1 > T_min:
        raise ValueError(
            f"2K+1 = {2 * K + 1} exceeds the shortest demonstration "
            f"(T = {T_min})")
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    D = demos[0].D
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AmplitudeFloorWarning)
        X = [to_logpolar(fit_weights(d, K), eps_r) for d in demos]
    n_floored = sum(1 for w in caught
                    if issubclass(w.category, AmplitudeFloorWarning))
    if n_floored:
        warnings.warn(
            f"amplitude floor eps_r={eps_r:g} applied in {n_floored} of "
            f"{len(demos)} demonstrations", AmplitudeFloorWarning,
            stacklevel=2)
    X, phase_ref = align_phases(X, K)
    X = np.asarray(X)
    mu = X.mean(axis=0)
    diff = X - mu
    sigma = diff.T @ diff / len(X)
    sigma = 0.5 * (sigma + sigma.T)
    sigma[np.diag_indices_from(sigma)] += _loading(sigma, lam)
    ref_duration = float(np.mean([d.duration for d in demos]))
    return GestureModel(mu, sigma, D, K, ref_duration, lam, phase_ref)


def _sqrt_factor(sigma, tol=1e-10):
    """Symmetric square root of a positive semi-definite matrix."""
    evals, evecs = np.linalg.eigh(sigma)
    floor = -tol * max(1.0, float(np.max(np.abs(evals))) if evals.size else 1.0)
    if evals.size and evals.min() < floor:
        raise np.linalg.LinAlgError(
            f"covariance is not positive semi-definite "
            f"(smallest eigenvalue {evals.min():.3g})")
    return (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T


def sample_model(model, seed=None, size=None):
    """Draw log-polar vectors ``mu + L z`` with ``L L^T = sigma``.

    Coordinates with zero variance (fixed by conditioning) are returned
    exactly at their mean.

    Parameters
    ----------
    model : GestureModel

    seed : int or numpy Generator, optional

    size : int, optional
        Number of draws. ``None`` returns a single vector.

    Returns
    -------
    x : array, shape (dim,) or (size, dim)
    """
    rng = np.random.default_rng(seed)
    diag = np.diag(model.sigma)
    fixed = diag == 0
    if np.any(model.sigma[fixed]):
        raise np.linalg.LinAlgError(
            "covariance has a zero variance with non-zero covariances")
    free = np.flatnonzero(~fixed)
    L = _sqrt_factor(model.sigma[np.ix_(free, free)])
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, free.size))
    x = np.tile(model.mu, (n, 1))
    x[:, free] += z @ L.T
    return x[0] if size is None else x


@dataclass(frozen=True)
class ConditioningConstraint:
    """Fix one coordinate of the model.

    ``value`` is in natural units: a positive amplitude for ``"amp"``
    targets (converted to ``ln`` internally), radians in ``(-pi, pi]`` for
    ``"phase"`` and radians for ``"dc"``.
    """
    dof: int
    k: int
    component: str
    value: float

    def __post_init__(self):
        if self.component not in COMPONENTS:
            raise ValueError(
                f"component must be one of {COMPONENTS}, got {self.component!r}")
        if not np.isfinite(self.value):
            raise ValueError(f"constraint value must be finite, got {self.value}")
        if self.component == LOG_AMP and self.value <= 0:
            raise ValueError(
                f"amplitude constraint must be > 0, got {self.value}")
        if self.component == PHASE and not -np.pi < self.value <= np.pi:
            raise ValueError(
                f"phase constraint must lie in (-pi, pi], got {self.value}")


def _target_value(model, c):
    i = model.index_map.index(c.dof, c.k, c.component)
    if c.component == LOG_AMP:
        return i, float(np.log(c.value))
    if c.component == PHASE:
        ref = model.phase_ref[c.dof * model.K + c.k - 1]
        return i, float(ref + wrap_angle(c.value - ref))
    return i, float(c.value)


def condition(model, constraints, cond_limit=1e12):
    """Condition the Gaussian on fixed values of some coordinates.

    The result keeps the full dimension: constrained coordinates get their
    value as mean and zero variance, the free block holds the Schur
    complement. Re-fixing an already fixed coordinate to the same value is a
    no-op.
    """
    if isinstance(constraints, ConditioningConstraint):
        constraints = [constraints]
    constraints = list(constraints)
    if not constraints:
        return model
    targets = {}
    for c in constraints:
        i, v = _target_value(model, c)
        if i in targets:
            raise ValueError(
                f"duplicate constraint on dof={c.dof}, k={c.k}, "
                f"{c.component}")
        targets[i] = v

    mu = model.mu.copy()
    sigma = model.sigma.copy()
    fixed = np.diag(sigma) == 0
    new = {}
    for i, v in targets.items():
        if fixed[i]:
            if abs(mu[i] - v) > 1e-12 * max(1.0, abs(v)):
                raise ValueError(
                    f"coordinate {model.index_map.descriptor(i)} is already "
                    f"fixed at {mu[i]!r}, cannot set it to {v!r}")
        else:
            new[i] = v
    free = np.array([i for i in range(model.dim)
                     if i not in targets and not fixed[i]], dtype=int)
    if free.size == 0:
        raise ValueError("conditioning would leave no free coordinate")
    if not new:
        return model

    b = np.array(sorted(new), dtype=int)
    xb = np.array([new[i] for i in b])
    S_bb = sigma[np.ix_(b, b)]
    S_ab = sigma[np.ix_(free, b)]
    if np.linalg.cond(S_bb) > cond_limit:
        raise np.linalg.LinAlgError(
            "constrained covariance block is numerically singular; "
            "increase the regularization lambda")
    factor = scipy.linalg.cho_factor(S_bb)
    gain = scipy.linalg.cho_solve(factor, S_ab.T).T
    mu[free] += gain @ (xb - mu[b])
    S_cond = sigma[np.ix_(free, free)] - gain @ S_ab.T
    S_cond = 0.5 * (S_cond + S_cond.T)
    if np.linalg.eigvalsh(S_cond).min() <= 0:
        S_cond[np.diag_indices_from(S_cond)] += _loading(S_cond, model.lam)

    mu[b] = xb
    out = np.zeros_like(sigma)
    out[np.ix_(free, free)] = S_cond
    return replace(model, mu=mu, sigma=out)


def _fmt(values):
    return "[" + ", ".join(format(float(v), ".17g") for v in values) + "]"


def save_model(model, path):
    """Write the model as JSON with 17 significant digits per number."""
    fields = [
        ("schema_version", str(SCHEMA_VERSION)),
        ("D", str(model.D)),
        ("K", str(model.K)),
        ("ref_duration_s", format(model.ref_duration, ".17g")),
        ("lambda", format(model.lam, ".17g")),
        ("index_layout", json.dumps(INDEX_LAYOUT)),
        ("mu", _fmt(model.mu)),
        ("sigma", _fmt(model.sigma.reshape(-1))),
        ("phase_ref", _fmt(model.phase_ref)),
    ]
    body = ",\n".join(f'  "{key}": {value}' for key, value in fields)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("{\n" + body + "\n}\n")


def load_model(path):
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path}: invalid JSON: {e}") from None
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported schema_version {version!r}, "
            f"expected {SCHEMA_VERSION}")
    try:
        D, K = int(data["D"]), int(data["K"])
        mu = np.asarray(data["mu"], dtype=float)
        sigma = np.asarray(data["sigma"], dtype=float)
        phase_ref = np.asarray(data["phase_ref"], dtype=float)
        ref_duration = float(data["ref_duration_s"])
        lam = float(data["lambda"])
    except KeyError as e:
        raise ModelFormatError(f"{path}: missing field {e}") from None
    dim = D * (2 * K + 1)
    if mu.size != dim:
        raise ModelFormatError(
            f"{path}: mu has {mu.size} entries, expected {dim}")
    if sigma.size != dim * dim:
        raise ModelFormatError(
            f"{path}: sigma has {sigma.size} entries, expected {dim * dim}")
    return GestureModel(mu, sigma.reshape(dim, dim), D, K, ref_duration,
                        lam, phase_ref)
