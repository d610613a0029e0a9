"""Serial-chain forward kinematics and overlaid-pose SVG rendering."""
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

PLANES = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}


@dataclass(frozen=True)
class Joint:
    """Revolute joint followed by a rigid link.

    Parameters
    ----------
    axis : array, shape (3,)
        Rotation axis in the parent frame; normalized on construction.

    offset : array, shape (3,)
        Displacement to the next joint, in the frame after rotation (m).

    limits : (float, float)
        Inclusive joint range in radians.

    rest : float
        Angle held when no trajectory dimension drives this joint.
    """
    axis: np.ndarray
    offset: np.ndarray
    limits: tuple = (-math.pi, math.pi)
    rest: float = 0.0
    name: str = ""

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        norm = np.linalg.norm(axis)
        if not norm > 0:
            raise ValueError(f"joint {self.name!r}: axis must be non-zero")
        offset = np.asarray(self.offset, dtype=float).reshape(3)
        lo, hi = (float(v) for v in self.limits)
        if lo > hi:
            raise ValueError(
                f"joint {self.name!r}: limits min {lo} exceeds max {hi}")
        object.__setattr__(self, "axis", axis / norm)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "limits", (lo, hi))
        object.__setattr__(self, "rest", float(self.rest))


@dataclass(frozen=True)
class KinematicChain:
    """Joints rooted at a base pose, plus the trajectory-to-joint map.

    ``joint_map[d]`` is the chain joint driven by trajectory column ``d``;
    ``None`` maps column ``i`` to joint ``i``.
    """
    joints: tuple
    base_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    base_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    joint_map: tuple = None
    scale: float = 100.0

    def __post_init__(self):
        joints = tuple(self.joints)
        if not joints:
            raise ValueError("a chain needs at least one joint")
        R = np.asarray(self.base_rotation, dtype=float)
        if R.shape != (3, 3) or not np.allclose(R @ R.T, np.eye(3), atol=1e-9):
            raise ValueError("base_rotation must be a 3x3 rotation matrix")
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "base_position",
                           np.asarray(self.base_position, dtype=float).reshape(3))
        object.__setattr__(self, "base_rotation", R)
        if self.joint_map is not None:
            jm = tuple(int(j) for j in self.joint_map)
            if len(set(jm)) != len(jm) or any(not 0 <= j < len(joints)
                                              for j in jm):
                raise ValueError(
                    f"joint_map {jm} must list distinct joints in "
                    f"0..{len(joints) - 1}")
            object.__setattr__(self, "joint_map", jm)
        if not self.scale > 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")

    @property
    def N(self):
        return len(self.joints)

    @property
    def link_lengths(self):
        return np.array([np.linalg.norm(j.offset) for j in self.joints])


def _base_rotation(pose):
    if "rotation" in pose:
        return np.asarray(pose["rotation"], dtype=float)
    if "rpy" in pose:
        return Rotation.from_euler("xyz", pose["rpy"]).as_matrix()
    return np.eye(3)


def chain_from_dict(data):
    joints = [Joint(j["axis"], j["offset"],
                    tuple(j.get("limits", (-math.pi, math.pi))),
                    j.get("rest", 0.0), j.get("name", f"joint{i}"))
              for i, j in enumerate(data["joints"])]
    pose = data.get("base_pose", {})
    return KinematicChain(
        joints,
        base_position=pose.get("position", [0.0, 0.0, 0.0]),
        base_rotation=_base_rotation(pose),
        joint_map=data.get("joint_map"),
        scale=data.get("scale_mm_per_m", 100.0),
    )


def load_chain(path):
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    try:
        return chain_from_dict(data)
    except KeyError as e:
        raise ValueError(f"{path}: missing field {e}") from None


def example_chain_path():
    """Path of the shipped 6-joint arm configuration."""
    return Path(__file__).parent / "data" / "arm6.json"


def _axis_rotations(axis, angles):
    """Rodrigues rotation matrices about one unit axis, shape (F, 3, 3)."""
    x, y, z = axis
    Kx = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    s = np.sin(angles)[:, None, None]
    c = np.cos(angles)[:, None, None]
    return np.eye(3) + s * Kx + (1.0 - c) * (Kx @ Kx)


def forward_kinematics_batch(chain, Q):
    """Joint positions for many configurations.

    Parameters
    ----------
    chain : KinematicChain

    Q : array, shape (F, N)
        Joint angles of ``F`` configurations.

    Returns
    -------
    P : array, shape (F, N+1, 3)
        Base position followed by the end of every link.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape[1] != chain.N:
        raise ValueError(
            f"expected {chain.N} joint angles, got {Q.shape[1]}")
    F = Q.shape[0]
    R = np.broadcast_to(chain.base_rotation, (F, 3, 3))
    p = np.broadcast_to(chain.base_position, (F, 3))
    P = [p]
    for i, joint in enumerate(chain.joints):
        R = R @ _axis_rotations(joint.axis, Q[:, i])
        p = p + R @ joint.offset
        P.append(p)
    return np.stack(P, axis=1)


def forward_kinematics(chain, q):
    """Positions of the base and every link end, shape (N+1, 3)."""
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.N,):
        raise ValueError(f"expected {chain.N} joint angles, got shape {q.shape}")
    return forward_kinematics_batch(chain, q[np.newaxis])[0]


def joint_configurations(chain, trajectory):
    """Expand a ``(T, D)`` trajectory into ``(T, N)`` chain joint angles."""
    y = trajectory.samples if hasattr(trajectory, "samples") else np.asarray(
        trajectory, dtype=float)
    y = np.atleast_2d(y)
    jm = chain.joint_map if chain.joint_map is not None else tuple(range(chain.N))
    if y.shape[1] != len(jm):
        raise ValueError(
            f"trajectory has {y.shape[1]} joints but the chain maps "
            f"{len(jm)}")
    Q = np.tile([j.rest for j in chain.joints], (y.shape[0], 1))
    Q[:, list(jm)] = y
    return Q


@dataclass(frozen=True)
class LimitViolation:
    frame: int
    joint: int
    value: float
    limits: tuple


def check_joint_limits(chain, trajectory):
    """List every (frame, joint) outside its inclusive limits."""
    return _violations(chain, joint_configurations(chain, trajectory))


def _violations(chain, Q):
    lo = np.array([j.limits[0] for j in chain.joints])
    hi = np.array([j.limits[1] for j in chain.joints])
    bad = np.argwhere((Q < lo) | (Q > hi))
    return [LimitViolation(int(f), int(j), float(Q[f, j]),
                           chain.joints[j].limits) for f, j in bad]


def _num(v):
    # 1e-4 document units (0.1 um), normalizes -0
    return format(round(float(v), 4) + 0.0, ".10g")


def render_overlay(chain, trajectory, stride=1, plane="xy", scale=None,
                   title=None):
    """SVG document overlaying the chain at every ``stride``-th frame.

    Older frames are fainter. Frames with a joint outside its limits are
    drawn in red but not clamped. Document units are millimeters:
    ``scale`` (default ``chain.scale``) millimeters per meter.
    """
    if int(stride) != stride or stride < 1:
        raise ValueError(f"stride must be an integer >= 1, got {stride}")
    if plane not in PLANES:
        raise ValueError(f"plane must be one of {sorted(PLANES)}, got {plane!r}")
    Q = joint_configurations(chain, trajectory)
    if Q.shape[0] == 0:
        raise ValueError("trajectory has no frames")
    scale = chain.scale if scale is None else float(scale)
    frames = np.arange(0, Q.shape[0], int(stride))
    P = forward_kinematics_batch(chain, Q[frames])
    a, b = PLANES[plane]
    u = P[:, :, a] * scale
    v = -P[:, :, b] * scale
    flagged = {viol.frame for viol in _violations(chain, Q)}

    pad = 0.05 * max(np.ptp(u), np.ptp(v), 1e-3 * scale) + 1.0
    x0, y0 = u.min() - pad, v.min() - pad
    width, height = np.ptp(u) + 2 * pad, np.ptp(v) + 2 * pad
    stroke_w = max(width, height) / 300.0

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_num(width)}mm" height="{_num(height)}mm" '
        f'viewBox="{_num(x0)} {_num(y0)} {_num(width)} {_num(height)}">',
    ]
    if title:
        out.append(f"<title>{_escape(title)}</title>")
    n = len(frames)
    for i, frame in enumerate(frames):
        color = "#c0392b" if int(frame) in flagged else "#1f3a93"
        points = " ".join(f"{_num(x)},{_num(y)}" for x, y in zip(u[i], v[i]))
        out.append(
            f'<polyline data-frame="{int(frame)}" points="{points}" '
            f'fill="none" stroke="{color}" stroke-width="{_num(stroke_w)}" '
            f'stroke-linecap="round" stroke-linejoin="round" '
            f'stroke-opacity="{_num((i + 1) / n)}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text):
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))
