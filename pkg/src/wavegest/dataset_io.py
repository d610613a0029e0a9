"""Demonstration trajectories and their on-disk text format.

A demonstration file is comma separated UTF-8 text::

    # dt=0.01
    # name=wave_03
    0.12,-0.4,1.3,0.0,0.2
    ...

The ``name`` line is optional. Every following line holds one sample of
``D`` joint angles in radians.
"""
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEMO_SUFFIX = ".csv"


class DemoFormatError(ValueError):
    """Raised when a demonstration file or array violates the format."""


@dataclass(frozen=True)
class Demonstration:
    """One recorded multi-joint trajectory sampled at a uniform interval.

    Parameters
    ----------
    samples : array, shape (T, D)
        Joint angles in radians.

    dt : float
        Sampling interval in seconds.

    name : str, optional
        Identifier, defaults to the empty string.
    """
    samples: np.ndarray
    dt: float
    name: str = ""

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, np.newaxis]
        if samples.ndim != 2:
            raise DemoFormatError(
                f"samples must be a T x D matrix, got shape {samples.shape}")
        T, D = samples.shape
        if T < 2 or D < 1:
            raise DemoFormatError(
                f"need at least 2 samples and 1 joint, got T={T}, D={D}")
        if not np.all(np.isfinite(samples)):
            row, col = np.argwhere(~np.isfinite(samples))[0]
            raise DemoFormatError(
                f"non-finite value at row {row + 1}, column {col + 1}")
        dt = float(self.dt)
        if not math.isfinite(dt) or dt <= 0:
            raise DemoFormatError(f"dt must be a positive number, got {self.dt}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "dt", dt)

    @property
    def T(self):
        return self.samples.shape[0]

    @property
    def D(self):
        return self.samples.shape[1]

    @property
    def duration(self):
        """Covered time span ``T * dt`` in seconds (one full period)."""
        return self.T * self.dt


@dataclass(frozen=True)
class Dataset:
    demos: tuple = field(default_factory=tuple)

    def __post_init__(self):
        demos = tuple(self.demos)
        if not demos:
            raise DemoFormatError("a dataset needs at least one demonstration")
        D = demos[0].D
        for demo in demos[1:]:
            if demo.D != D:
                raise DemoFormatError(
                    f"joint count mismatch: {demos[0].name!r} has D={D}, "
                    f"{demo.name!r} has D={demo.D}")
        object.__setattr__(self, "demos", demos)

    @property
    def D(self):
        return self.demos[0].D

    @property
    def M(self):
        return len(self.demos)

    def __len__(self):
        return len(self.demos)

    def __iter__(self):
        return iter(self.demos)

    def __getitem__(self, i):
        return self.demos[i]


def _parse_header(line, key, path, lineno):
    text = line.strip()
    prefix = f"# {key}="
    if not text.startswith(prefix):
        raise DemoFormatError(
            f"{path}: line {lineno}: expected header '{prefix}<value>', "
            f"got {text!r}")
    return text[len(prefix):].strip()


def load_demo(path):
    """Read a demonstration file.

    Errors name the offending data row (1-based, counted after the header)
    together with the physical line number.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path}: no such demonstration file")
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise DemoFormatError(f"{path}: empty file, missing '# dt=' header")

    dt_text = _parse_header(lines[0], "dt", path, 1)
    try:
        dt = float(dt_text)
    except ValueError:
        raise DemoFormatError(
            f"{path}: line 1: dt value {dt_text!r} is not a number") from None
    if not math.isfinite(dt) or dt <= 0:
        raise DemoFormatError(f"{path}: line 1: dt must be > 0, got {dt_text}")

    body_start = 1
    name = path.stem
    if len(lines) > 1 and lines[1].lstrip().startswith("# name="):
        name = _parse_header(lines[1], "name", path, 2)
        body_start = 2

    rows = []
    n_cols = None
    for lineno, line in enumerate(lines[body_start:], start=body_start + 1):
        if not line.strip():
            continue
        row_no = len(rows) + 1
        fields = line.split(",")
        if n_cols is None:
            n_cols = len(fields)
        elif len(fields) != n_cols:
            raise DemoFormatError(
                f"{path}: row {row_no} (line {lineno}) has {len(fields)} "
                f"fields, expected {n_cols}")
        values = []
        for col, token in enumerate(fields, start=1):
            try:
                value = float(token)
            except ValueError:
                raise DemoFormatError(
                    f"{path}: row {row_no} (line {lineno}), column {col}: "
                    f"{token.strip()!r} is not a number") from None
            if not math.isfinite(value):
                raise DemoFormatError(
                    f"{path}: row {row_no} (line {lineno}), column {col}: "
                    f"non-finite value {token.strip()!r}")
            values.append(value)
        rows.append(values)

    if len(rows) < 2:
        raise DemoFormatError(
            f"{path}: need at least 2 samples, found {len(rows)}")
    return Demonstration(np.array(rows), dt, name)


def save_demo(demo, path):
    """Write ``demo`` so that :func:`load_demo` restores it bit-exactly."""
    path = Path(path)
    lines = [f"# dt={demo.dt!r}"]
    if demo.name:
        lines.append(f"# name={demo.name}")
    for row in demo.samples:
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def load_dataset(directory):
    """Load every ``*.csv`` demonstration in ``directory``, ordered by filename."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"{directory}: not a directory")
    files = sorted(p for p in directory.iterdir()
                   if p.is_file() and p.suffix == DEMO_SUFFIX)
    if not files:
        raise DemoFormatError(
            f"{directory}: no demonstration files (*{DEMO_SUFFIX})")
    demos = []
    for path in files:
        demo = load_demo(path)
        if demos and demo.D != demos[0].D:
            raise DemoFormatError(
                f"joint count mismatch: {files[0].name} has D={demos[0].D}, "
                f"{path.name} has D={demo.D}")
        demos.append(demo)
    return Dataset(tuple(demos))


def save_dataset(dataset, directory, prefix="demo"):
    """Write each demonstration as ``<prefix>_NNN.csv``; returns the paths."""
    directory = Path(directory)
    os.makedirs(directory, exist_ok=True)
    width = max(3, len(str(len(dataset) - 1)))
    paths = []
    for i, demo in enumerate(dataset):
        path = directory / f"{prefix}_{i:0{width}d}{DEMO_SUFFIX}"
        save_demo(demo, path)
        paths.append(path)
    return paths
