"""Turn log-polar vectors into joint trajectories and modulate them."""
from dataclasses import dataclass, replace

import numpy as np

from .basis import evaluate
from .dataset_io import Demonstration
from .model import DC, LOG_AMP, PHASE, WeightIndexMap, from_logpolar, sample_model

REALNESS_TOL = 1e-9


@dataclass(frozen=True)
class SynthesisRequest:
    """How to sample a synthesized gesture.

    Parameters
    ----------
    duration : float
        Output length in seconds. Longer than one period tiles the waveform.

    rate : float
        Samples per second.

    period_scale : float, optional (default: 1)
        One basis period spans ``period_scale * ref_duration`` seconds.
    """
    duration: float
    rate: float = 100.0
    period_scale: float = 1.0

    def __post_init__(self):
        if not self.duration > 0 or not self.rate > 0:
            raise ValueError(
                f"duration and rate must be > 0, got {self.duration}, "
                f"{self.rate}")
        if not self.period_scale > 0:
            raise ValueError(
                f"period_scale must be > 0, got {self.period_scale}")
        if self.n_samples < 2:
            raise ValueError(
                f"duration * rate = {self.duration * self.rate:g} gives fewer "
                "than 2 samples")

    @property
    def n_samples(self):
        return int(round(self.duration * self.rate))


def _check_dim(x, D, K):
    x = np.asarray(x, dtype=float)
    if x.shape != (D * (2 * K + 1),):
        raise ValueError(
            f"vector of shape {x.shape} does not match D={D}, K={K} "
            f"(expected length {D * (2 * K + 1)})")
    return x


def synthesize(x, D, K, ref_duration, req, name="synth", return_imag=False):
    """Joint trajectory of a log-polar vector.

    Sample ``n`` lies at time ``n / rate``; the basis completes one period
    every ``ref_duration * req.period_scale`` seconds.
    """
    x = _check_dim(x, D, K)
    period = ref_duration * req.period_scale
    weights = from_logpolar(x, K, period)
    t = np.arange(req.n_samples) / req.rate
    y = evaluate(weights, np.mod(t / period, 1.0))
    imag = float(np.max(np.abs(y.imag)))
    if imag > REALNESS_TOL * max(1.0, float(np.abs(weights.coeffs).sum())):
        raise ArithmeticError(
            f"synthesized trajectory has imaginary part {imag:.3g}")
    demo = Demonstration(y.real, 1.0 / req.rate, name)
    return (demo, imag) if return_imag else demo


def sample_gesture(model, seed, req, name=None):
    """Sample a vector from ``model`` and synthesize it."""
    x = sample_model(model, seed)
    return synthesize(x, model.D, model.K, model.ref_duration, req,
                      name=name or f"sample_seed{seed}")


def scale_amplitude(x, K, factor, dofs=None):
    """Multiply every harmonic amplitude of the selected joints by ``factor``.

    ``dofs=None`` selects all joints. Offsets and phases are untouched.
    """
    if not factor > 0:
        raise ValueError(f"amplitude factor must be > 0, got {factor}")
    x = np.array(x, dtype=float)
    imap = WeightIndexMap(x.size // (2 * K + 1), K)
    idx = imap.component_indices(LOG_AMP)
    if dofs is not None:
        idx = idx[list(dofs)]
    x[idx.reshape(-1)] += np.log(factor)
    return x


def shift_phase(x, K, delta, k, dof):
    """Add ``delta`` radians to the phase of harmonic ``k`` of joint ``dof``.

    The result is not re-wrapped.
    """
    x = np.array(x, dtype=float)
    imap = WeightIndexMap(x.size // (2 * K + 1), K)
    x[imap.index(dof, k, PHASE)] += delta
    return x


def time_scale(req, gamma):
    """Stretch the period by ``gamma``: every frequency is divided by ``gamma``."""
    if not gamma > 0:
        raise ValueError(f"time scale must be > 0, got {gamma}")
    return replace(req, period_scale=req.period_scale * gamma)


def spectrum_stats(model, include_dc=False):
    """Single-sided amplitude spectrum of the model mean.

    Returns an array of shape (D, K) holding ``exp(mu)`` at every
    log-amplitude coordinate, i.e. the geometric-mean modulus for
    ``k = 1..K``. With ``include_dc`` the raw offset mean is prepended as
    column ``k = 0``, giving shape (D, K+1).
    """
    imap = model.index_map
    amp = np.exp(model.mu[imap.component_indices(LOG_AMP)])
    if include_dc:
        dc = model.mu[imap.component_indices(DC)]
        amp = np.hstack([dc[:, np.newaxis], amp])
    return amp


def write_spectrum(spectrum, path, include_dc=False):
    """CSV with header ``dof,k,amplitude`` and one row per (dof, k).

    Amplitudes are printed with 15 significant digits, enough to recover
    decimal inputs such as a conditioned amplitude of 5 after the
    ``exp(ln(.))`` round trip.
    """
    k0 = 0 if include_dc else 1
    lines = ["dof,k,amplitude"]
    for d, row in enumerate(np.atleast_2d(spectrum)):
        for j, a in enumerate(row):
            lines.append(f"{d},{j + k0},{float(a):.15g}")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def read_spectrum(path):
    """Parse a spectrum CSV into ``{(dof, k): amplitude}``."""
    out = {}
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip()
        if header != "dof,k,amplitude":
            raise ValueError(f"{path}: unexpected spectrum header {header!r}")
        for line in f:
            if line.strip():
                d, k, a = line.split(",")
                out[int(d), int(k)] = float(a)
    return out
