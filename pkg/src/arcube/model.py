"""Core geometric vocabulary of the AR-CUBE mechanism.

The AR-CUBE is a three-legged parallel mechanism with five actuated joints
producing 3T2R motion (three translations of the drill tip, two rotations of
the drill axis).  Everything downstream -- kinematics, velocity model,
dexterity, optimization -- shares the types and frame conventions defined
here.

Conventions used throughout the package:

* the mechanism frame ``R_m`` is right-handed with axes ``x_m, y_m, z_m``;
* each leg ``u`` in ``{x, y, z}`` works in its own triad ``(u, v, w)``, a
  cyclic permutation of the mechanism axes;
* lengths are millimetres, angles are radians internally and degrees in all
  files and CLI I/O;
* all value types are immutable after construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import IO, Iterable

__all__ = [
    "LEGS",
    "AXIS_INDEX",
    "DESIGN_LAYOUT",
    "DESIGN_SIZE",
    "LegFrame",
    "leg_frame",
    "drill_axis",
    "drill_axis_partials",
    "normalize_angle",
    "DesignVector",
    "reference_design",
    "TaskPose",
    "JointState",
]

#: Leg identifiers, in mechanism-axis order.
LEGS = ("x", "y", "z")

#: Component index of each mechanism axis in a 3-vector.
AXIS_INDEX = {"x": 0, "y": 1, "z": 2}

_TWO_PI = 2.0 * math.pi


def normalize_angle(angle: float) -> float:
    """Wrap an angle to the interval (-pi, pi]."""
    wrapped = math.remainder(angle, _TWO_PI)
    if wrapped <= -math.pi:
        wrapped = math.pi
    return wrapped


@dataclass(frozen=True)
class LegFrame:
    """Right-handed unit triad (u, v, w) of one leg.

    The triad is a cyclic permutation of the mechanism axes, so it is stored
    as the three component indices rather than as vectors.  ``iu`` is the
    index of the leg's own axis, ``iv`` and ``iw`` the indices of the two
    remaining axes in cyclic order (which makes u x v = w hold exactly).
    """

    leg: str
    iu: int
    iv: int
    iw: int

    def split(self, vec) -> tuple[float, float, float]:
        """Components of a 3-vector along (u, v, w)."""
        return vec[self.iu], vec[self.iv], vec[self.iw]


_FRAMES = {
    "x": LegFrame("x", 0, 1, 2),
    "y": LegFrame("y", 1, 2, 0),
    "z": LegFrame("z", 2, 0, 1),
}


def leg_frame(leg: str) -> LegFrame:
    """Return the (u, v, w) triad of a leg as a cyclic axis permutation."""
    try:
        return _FRAMES[leg]
    except KeyError:
        raise ValueError(f"unknown leg {leg!r}, expected one of {LEGS}") from None


def drill_axis(psi: float, theta: float) -> tuple[float, float, float]:
    """Unit drill-axis direction for azimuth ``psi`` and polar angle ``theta``.

    Spherical coordinates about ``z_m``: ``theta`` is measured from ``z_m``,
    ``psi`` around it.  ``theta = 0`` points along ``z_m`` regardless of
    ``psi``.
    """
    st = math.sin(theta)
    return (math.cos(psi) * st, math.sin(psi) * st, math.cos(theta))


def drill_axis_partials(
    psi: float, theta: float
) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    """Partial derivatives (de/dpsi, de/dtheta) of the drill axis."""
    sp, cp = math.sin(psi), math.cos(psi)
    st, ct = math.sin(theta), math.cos(theta)
    d_psi = (-sp * st, cp * st, 0.0)
    d_theta = (cp * ct, sp * ct, -st)
    return d_psi, d_theta


# Order of the 23 scalars in the flat array form of a DesignVector.  The GA
# and the bounds tables index into this layout.
DESIGN_LAYOUT = (
    ("m", 3),
    ("f", 3),
    ("p", 3),
    ("d", 3),
    ("c", 2),
    ("t", 2),
    ("r", 1),
    ("o", 2),
    ("alpha", 2),
    ("beta", 2),
)

DESIGN_SIZE = sum(n for _, n in DESIGN_LAYOUT)  # 23


@dataclass(frozen=True)
class DesignVector:
    """The 23 link dimensions and parameters of one mechanism candidate.

    Lengths in mm.  ``alpha`` and ``beta`` (the spherical-link arc angles of
    the rotational stage) are radians here; the JSON file format stores them
    in degrees under ``alpha_deg`` / ``beta_deg``.

    Three-entry tuples are ordered (x, y, z); two-entry tuples (x, y) -- the
    z leg keeps the original purely translational distal linkage and has no
    coupling link, transmitting link, offset or spherical links.
    """

    m: tuple[float, float, float]  # base position of R_m in the world frame
    f: tuple[float, float, float]  # frame-link lengths
    p: tuple[float, float, float]  # proximal-link lengths
    d: tuple[float, float, float]  # distal-link lengths
    c: tuple[float, float]  # coupling-link lengths
    t: tuple[float, float]  # transmitting-link lengths
    r: float  # shared radius of the rotational stage
    o: tuple[float, float]  # transmitting-pivot offsets along w (may be < 0)
    alpha: tuple[float, float]  # proximal spherical-link angles, rad
    beta: tuple[float, float]  # distal spherical-link angles, rad

    def __post_init__(self):
        for name, size in DESIGN_LAYOUT:
            value = getattr(self, name)
            if size == 1:
                continue
            if len(value) != size:
                raise ValueError(f"{name} must have {size} entries, got {len(value)}")
        for name in ("f", "p", "d", "c", "t"):
            if any(not (v > 0.0) for v in getattr(self, name)):
                raise ValueError(f"all {name} lengths must be strictly positive")
        if not (self.r > 0.0):
            raise ValueError("r must be strictly positive")
        for name in ("alpha", "beta"):
            if any(not (0.0 < v < math.pi) for v in getattr(self, name)):
                raise ValueError(f"{name} angles must lie in (0, pi)")

    # -- flat array form -------------------------------------------------

    def to_array(self) -> list[float]:
        """Flatten to the 23-scalar layout used by the optimizer."""
        out: list[float] = []
        for name, size in DESIGN_LAYOUT:
            value = getattr(self, name)
            if size == 1:
                out.append(float(value))
            else:
                out.extend(float(v) for v in value)
        return out

    @classmethod
    def from_array(cls, values: Iterable[float]) -> "DesignVector":
        vals = [float(v) for v in values]
        if len(vals) != DESIGN_SIZE:
            raise ValueError(f"expected {DESIGN_SIZE} values, got {len(vals)}")
        kwargs = {}
        i = 0
        for name, size in DESIGN_LAYOUT:
            if size == 1:
                kwargs[name] = vals[i]
            else:
                kwargs[name] = tuple(vals[i : i + size])
            i += size
        return cls(**kwargs)

    # -- JSON file form ---------------------------------------------------

    def to_json_dict(self) -> dict:
        """Serializable dict with spherical angles in degrees."""
        return {
            "m": list(self.m),
            "f": list(self.f),
            "p": list(self.p),
            "d": list(self.d),
            "c": list(self.c),
            "t": list(self.t),
            "r": self.r,
            "o": list(self.o),
            "alpha_deg": [math.degrees(a) for a in self.alpha],
            "beta_deg": [math.degrees(b) for b in self.beta],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "DesignVector":
        try:
            return cls(
                m=tuple(float(v) for v in data["m"]),
                f=tuple(float(v) for v in data["f"]),
                p=tuple(float(v) for v in data["p"]),
                d=tuple(float(v) for v in data["d"]),
                c=tuple(float(v) for v in data["c"]),
                t=tuple(float(v) for v in data["t"]),
                r=float(data["r"]),
                o=tuple(float(v) for v in data["o"]),
                alpha=tuple(math.radians(float(v)) for v in data["alpha_deg"]),
                beta=tuple(math.radians(float(v)) for v in data["beta_deg"]),
            )
        except KeyError as exc:
            raise ValueError(f"design JSON is missing key {exc}") from None

    def save(self, path_or_file: str | IO[str]) -> None:
        if hasattr(path_or_file, "write"):
            json.dump(self.to_json_dict(), path_or_file, indent=2)
            path_or_file.write("\n")
        else:
            with open(path_or_file, "w", encoding="utf-8") as fh:
                self.save(fh)

    @classmethod
    def load(cls, path_or_file: str | IO[str]) -> "DesignVector":
        if hasattr(path_or_file, "read"):
            return cls.from_json_dict(json.load(path_or_file))
        with open(path_or_file, "r", encoding="utf-8") as fh:
            return cls.load(fh)


def reference_design() -> DesignVector:
    """The optimized reference mechanism shipped with the package.

    Degree-valued spherical-link angles in the source file are converted to
    radians on load, like any other design JSON.
    """
    text = resources.files("arcube").joinpath("data/reference_design.json").read_text()
    return DesignVector.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class TaskPose:
    """A 5-DoF task-space pose: drill-tip position plus drill-axis angles.

    Position is in the mechanism frame ``R_m`` (mm); ``psi``/``theta`` are
    the azimuth/polar angles of the drill axis (rad).
    """

    x: float
    y: float
    z: float
    psi: float
    theta: float

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def axis(self) -> tuple[float, float, float]:
        return drill_axis(self.psi, self.theta)


@dataclass(frozen=True)
class JointState:
    """The five active joint values plus the dependent transmitting angles.

    ``rho`` are the proximal joint angles of the translational stage, one per
    leg.  ``delta`` are the distal active joint angles of the two modified
    legs.  ``sigma`` are the dependent output angles of the transmitting
    four-bars (equal to the input angles of the spherical stage); they are
    cached here because both the transmitting and rotational closures share
    them.
    """

    rho: tuple[float, float, float]
    delta: tuple[float, float]
    sigma: tuple[float, float]

    def __post_init__(self):
        for name in ("rho", "delta", "sigma"):
            if any(not math.isfinite(v) for v in getattr(self, name)):
                raise ValueError(f"{name} contains a non-finite angle")
