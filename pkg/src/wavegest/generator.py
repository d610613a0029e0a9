"""Synthetic wave-gesture demonstrations.

Every demonstration is a single dominant oscillation per joint on top of a
posture offset::

    y_d(t) = offset_d + A_d cos(2 pi f t + phi_d) + noise

with one frequency ``f`` shared by all joints of a demonstration. Joint
amplitudes are drawn log-uniformly inside their range; coupled joint pairs
get correlated log-amplitudes through a Gaussian copula.
"""
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtr

from .dataset_io import Dataset, Demonstration


def _per_dof(ranges, D, name):
    arr = np.asarray(ranges, dtype=float)
    if arr.shape == (2,):
        arr = np.tile(arr, (D, 1))
    if arr.shape != (D, 2):
        raise ValueError(
            f"{name} must be one [lo, hi] pair or {D} pairs, got shape "
            f"{arr.shape}")
    if np.any(arr[:, 0] > arr[:, 1]):
        raise ValueError(f"{name}: lower bound above upper bound")
    return arr


@dataclass
class GeneratorSpec:
    """Parameters of the synthetic recording protocol.

    Ranges are ``[lo, hi]`` and sampled uniformly, except amplitudes which
    are sampled uniformly in log space. Per-joint ranges accept either one
    pair shared by all joints or one pair per joint.

    ``coupling`` holds ``(dof_a, dof_b, rho)`` triples: the Pearson
    correlation of the two joints' log-amplitudes across demonstrations.
    """
    D: int = 5
    M: int = 15
    duration_range: tuple = (6.0, 10.0)
    rate: float = 100.0
    offset_range: list = field(default_factory=lambda: [-0.5, 0.5])
    amplitude_range: list = field(default_factory=lambda: [0.05, 0.5])
    freq_range: tuple = (1.5, 3.0)
    max_cycles: int = 20
    phase: list = None
    phase_jitter: float = 0.2
    noise_std: float = 0.0
    coupling: list = field(default_factory=list)
    integer_cycles: bool = True

    def __post_init__(self):
        if self.D < 1 or self.M < 1:
            raise ValueError(f"need D >= 1 and M >= 1, got D={self.D}, M={self.M}")
        if not self.rate > 0:
            raise ValueError(f"rate must be > 0, got {self.rate}")
        lo, hi = self.duration_range
        if not 0 < lo <= hi:
            raise ValueError(f"invalid duration range {self.duration_range}")
        flo, fhi = self.freq_range
        if not 0 < flo <= fhi < self.rate / 2:
            raise ValueError(
                f"frequency range {self.freq_range} must lie inside "
                f"(0, rate/2 = {self.rate / 2})")
        if self.max_cycles < 1:
            raise ValueError(f"max_cycles must be >= 1, got {self.max_cycles}")
        if self.phase_jitter < 0 or self.noise_std < 0:
            raise ValueError("phase_jitter and noise_std must be >= 0")
        self.offsets = _per_dof(self.offset_range, self.D, "offset_range")
        self.amplitudes = _per_dof(self.amplitude_range, self.D,
                                   "amplitude_range")
        if np.any(self.amplitudes <= 0):
            raise ValueError("amplitude_range bounds must be > 0")
        base = np.zeros(self.D) if self.phase is None else np.asarray(
            self.phase, dtype=float)
        if base.shape != (self.D,):
            raise ValueError(f"phase must list {self.D} angles")
        self.base_phase = base
        seen = set()
        for a, b, rho in self.coupling:
            if not (0 <= a < self.D and 0 <= b < self.D) or a == b:
                raise ValueError(f"invalid coupling pair ({a}, {b})")
            if abs(rho) > 1:
                raise ValueError(f"coupling correlation {rho} outside [-1, 1]")
            if frozenset((a, b)) in seen:
                raise ValueError(f"duplicate coupling pair ({a}, {b})")
            seen.add(frozenset((a, b)))
        self.copula = self._copula_correlation()

    def _copula_correlation(self):
        # Gaussian copula parameter giving Pearson rho on uniform marginals
        R = np.eye(self.D)
        for a, b, rho in self.coupling:
            R[a, b] = R[b, a] = 2.0 * np.sin(np.pi * rho / 6.0)
        if np.linalg.eigvalsh(R).min() < -1e-12:
            raise ValueError(
                "coupling correlations are jointly inconsistent "
                "(correlation matrix not positive semi-definite)")
        return R

    def log_amplitude_mean(self, dof):
        lo, hi = np.log(self.amplitudes[dof])
        return 0.5 * (lo + hi)

    def log_amplitude_std(self, dof):
        lo, hi = np.log(self.amplitudes[dof])
        return (hi - lo) / np.sqrt(12.0)

    def to_dict(self):
        d = asdict(self)
        d["duration_range"] = list(self.duration_range)
        d["freq_range"] = list(self.freq_range)
        d["coupling"] = [list(c) for c in self.coupling]
        return d

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown generator spec fields: {sorted(unknown)}")
        data = dict(data)
        for key in ("duration_range", "freq_range"):
            if key in data:
                data[key] = tuple(data[key])
        if "coupling" in data:
            data["coupling"] = [(int(a), int(b), float(r))
                                for a, b, r in data["coupling"]]
        return cls(**data)


def load_generator_spec(path):
    with open(path, encoding="utf-8") as f:
        return GeneratorSpec.from_dict(json.load(f))


def _demo_timing(spec, rng):
    duration = rng.uniform(*spec.duration_range)
    f = rng.uniform(*spec.freq_range)
    if f * duration > spec.max_cycles:
        duration = spec.max_cycles / f
    T = max(2, int(np.floor(duration * spec.rate + 1e-9)))
    if spec.integer_cycles:
        cycles = int(np.clip(round(f * T / spec.rate), 1, spec.max_cycles))
        f = cycles * spec.rate / T
    return T, f


def generate_dataset(spec, seed=None, return_params=False):
    """Draw ``spec.M`` demonstrations; the result is a pure function of ``seed``.

    With ``return_params`` a list of per-demonstration dicts (``freq``,
    ``cycles``, ``amplitude``, ``offset``, ``phase``) is returned as well.
    """
    rng = np.random.default_rng(seed)
    evals, evecs = np.linalg.eigh(spec.copula)
    L = evecs * np.sqrt(np.clip(evals, 0.0, None))
    log_lo = np.log(spec.amplitudes[:, 0])
    log_hi = np.log(spec.amplitudes[:, 1])
    demos, params = [], []
    for m in range(spec.M):
        T, f = _demo_timing(spec, rng)
        u = ndtr(L @ rng.standard_normal(spec.D))
        amp = np.exp(log_lo + u * (log_hi - log_lo))
        offset = rng.uniform(spec.offsets[:, 0], spec.offsets[:, 1])
        phi = spec.base_phase + spec.phase_jitter * rng.standard_normal(spec.D)
        t = np.arange(T) / spec.rate
        y = offset + amp * np.cos(2.0 * np.pi * f * t[:, np.newaxis] + phi)
        if spec.noise_std > 0:
            y = y + spec.noise_std * rng.standard_normal(y.shape)
        demos.append(Demonstration(y, 1.0 / spec.rate, f"demo_{m:03d}"))
        params.append({"freq": f, "cycles": f * T / spec.rate,
                       "amplitude": amp, "offset": offset, "phase": phi})
    dataset = Dataset(tuple(demos))
    return (dataset, params) if return_params else dataset
