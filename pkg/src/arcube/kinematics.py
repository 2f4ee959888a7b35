"""Position kinematics of the three AR-CUBE stages.

The inverse kinematics cascades through the three stages in a fixed order:

1. translational stage (TLS): each proximal joint angle ``rho_u`` follows
   from the matching position coordinate alone;
2. rotational stage (RTS): each spherical-leg input angle ``sigma_u`` follows
   from the drill-axis direction through a spherical closure;
3. transmitting stage (TMS): each distal joint angle ``delta_u`` follows from
   a planar four-bar closure linking the platform, the proximal-link elbow
   and the transmitting link at its solved ``sigma_u``.

Both closures reduce to the scalar equation ``A sin q + B cos q = C``, solved
in closed form with a two-branch (elbow up/down) choice per leg.

Geometric anchoring used by the four-bar closure (the leg-local frame):

* the proximal joint of leg ``u`` sits at ``-(f_u + r)`` along the leg axis,
  so the elbow carrying the transmitting-link pivot is at leg-local
  ``(v, w) = (0, p_u cos rho_u)``;
* the transmitting-link pivot is additionally shifted by the offset ``o_u``
  along ``w``;
* the distal active joint rides on the platform at the end-effector's
  ``(v, w)`` coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .model import (
    AXIS_INDEX,
    DesignVector,
    JointState,
    TaskPose,
    drill_axis,
    leg_frame,
    normalize_angle,
)

__all__ = [
    "TrigClosure",
    "solve_trig",
    "UnreachableError",
    "ClosureError",
    "UnsolvableClosureError",
    "DegenerateClosureError",
    "tls_ik",
    "tls_fk",
    "tms_closure",
    "tms_residual",
    "rts_closure",
    "rts_axes",
    "rts_residual",
    "SphericalLegAxes",
    "IkSolution",
    "full_ik",
    "reach_local",
]

#: Legs carrying a modified (angular-transmission) distal linkage.
ANGULAR_LEGS = ("x", "y")

#: Relative solvability margin on the |C| <= sqrt(A^2 + B^2) test.
SOLVE_MARGIN = 1e-12

#: Residual acceptance thresholds for a solved configuration.
TMS_RESIDUAL_TOL = 1e-9  # mm^2, four-bar closure
RTS_RESIDUAL_TOL = 1e-12  # dimensionless, spherical closure


class ClosureError(ValueError):
    """Base class for scalar trigonometric closure failures."""


class UnsolvableClosureError(ClosureError):
    """|C| exceeds sqrt(A^2 + B^2): no angle satisfies the closure."""


class DegenerateClosureError(ClosureError):
    """A = B = 0: the closure does not constrain the angle at all."""


class UnreachableError(Exception):
    """A pose is outside the workspace; names the first failing stage/leg."""

    def __init__(self, stage: str, leg: str, message: str = ""):
        self.stage = stage
        self.leg = leg
        super().__init__(message or f"pose unreachable at stage {stage}, leg {leg}")


@dataclass(frozen=True)
class TrigClosure:
    """Coefficients of the scalar closure ``a sin(q) + b cos(q) = c``."""

    a: float
    b: float
    c: float

    @property
    def magnitude(self) -> float:
        return math.hypot(self.a, self.b)

    def solvable(self) -> bool:
        h = self.magnitude
        if h == 0.0:
            return abs(self.c) <= SOLVE_MARGIN
        return abs(self.c) <= h + SOLVE_MARGIN * max(1.0, h)

    def residual(self, q: float) -> float:
        return self.a * math.sin(q) + self.b * math.cos(q) - self.c


def solve_trig(closure: TrigClosure, branch: int = 1) -> float:
    """Solve ``a sin(q) + b cos(q) = c`` for one of its two roots.

    ``branch`` (+1 or -1) selects the sign of the arccos term; both roots
    satisfy the closure whenever it is solvable.  The result is normalized
    to (-pi, pi].

    Raises:
        DegenerateClosureError: if a = b = 0 (angle unconstrained).
        UnsolvableClosureError: if |c| > sqrt(a^2 + b^2) beyond the margin.
    """
    a, b, c = closure.a, closure.b, closure.c
    h = math.hypot(a, b)
    if h == 0.0:
        if abs(c) <= SOLVE_MARGIN:
            raise DegenerateClosureError("closure is identically satisfied")
        raise UnsolvableClosureError("zero coefficients with nonzero right-hand side")
    if abs(c) > h + SOLVE_MARGIN * max(1.0, h):
        raise UnsolvableClosureError(f"|c|={abs(c):.6g} exceeds sqrt(a^2+b^2)={h:.6g}")
    ratio = min(1.0, max(-1.0, c / h))
    q = math.atan2(a, b) + branch * math.acos(ratio)
    return normalize_angle(q)


# ---------------------------------------------------------------------------
# per-design lookup tables (hot-path helper)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _leg_tables(design: DesignVector):
    """Precomputed per-leg constants for the solver hot paths."""
    tls = tuple(
        (design.f[i] + design.r, design.p[i]) for i in range(3)
    )  # (f + r, p) per leg
    tms = []
    rts = []
    for k, leg in enumerate(ANGULAR_LEGS):
        frame = leg_frame(leg)
        tms.append(
            (
                frame.iv,
                frame.iw,
                design.d[k],
                design.c[k],
                design.t[k],
                design.o[k],
                design.p[k],
            )
        )
        rts.append(
            (
                frame.iu,
                frame.iv,
                frame.iw,
                math.sin(design.alpha[k]),
                math.cos(design.alpha[k]),
                math.cos(design.beta[k]),
            )
        )
    return tls, tuple(tms), tuple(rts)


# ---------------------------------------------------------------------------
# translational stage
# ---------------------------------------------------------------------------


def tls_ik(
    position: tuple[float, float, float], design: DesignVector
) -> tuple[float, float, float]:
    """Proximal joint angles for a drill-tip position.

    Per leg: ``rho_u = -asin((u + f_u + r) / p_u)`` on the principal branch,
    where ``u`` is the position coordinate along the leg axis.

    Raises:
        UnreachableError: ("tls", leg) when ``|u + f_u + r| > p_u``.
    """
    tls, _, _ = _leg_tables(design)
    rho = []
    for i, leg in enumerate(("x", "y", "z")):
        fr, p = tls[i]
        s = position[i] + fr
        if abs(s) > p:
            raise UnreachableError("tls", leg, f"leg {leg}: |{s:.6g}| > p={p:.6g}")
        rho.append(-math.asin(min(1.0, max(-1.0, s / p))))
    return (rho[0], rho[1], rho[2])


def tls_fk(
    rho: tuple[float, float, float], design: DesignVector
) -> tuple[float, float, float]:
    """Drill-tip position from proximal joint angles (``|rho_u| <= pi/2``).

    Per leg: ``u = -p_u sin(rho_u) - f_u - r``.
    """
    tls, _, _ = _leg_tables(design)
    return tuple(-tls[i][1] * math.sin(rho[i]) - tls[i][0] for i in range(3))


# ---------------------------------------------------------------------------
# transmitting stage (planar four-bar per angular leg)
# ---------------------------------------------------------------------------


def tms_closure(
    sigma_u: float,
    position: tuple[float, float, float],
    rho_u: float,
    design: DesignVector,
    leg: str,
) -> TrigClosure:
    """Four-bar closure of one angular leg as a trig closure in ``delta_u``.

    The coupling link of length ``c_u`` joins the distal-link tip (anchored
    on the platform) to the transmitting-link tip (anchored at the elbow,
    offset by ``o_u`` along ``w``).  With

        V = v + t_u sin(sigma_u)
        W = (w - o_u) - t_u cos(sigma_u) - p_u cos(rho_u)

    where (v, w) are the platform coordinates along the leg's v/w axes, the
    squared-distance condition expands to coefficients

        A = 2 d_u V,  B = -2 d_u W,  C = V^2 + W^2 + d_u^2 - c_u^2.
    """
    k = ANGULAR_LEGS.index(leg)
    _, tms, _ = _leg_tables(design)
    iv, iw, d, c, t, o, p = tms[k]
    v = position[iv]
    w = position[iw] - o
    big_v = v + t * math.sin(sigma_u)
    big_w = w - t * math.cos(sigma_u) - p * math.cos(rho_u)
    return TrigClosure(
        a=2.0 * d * big_v,
        b=-2.0 * d * big_w,
        c=big_v * big_v + big_w * big_w + d * d - c * c,
    )


def tms_residual(
    delta_u: float,
    sigma_u: float,
    position: tuple[float, float, float],
    rho_u: float,
    design: DesignVector,
    leg: str,
) -> float:
    """Signed defect (mm^2) of the four-bar squared-distance condition.

    Zero when the coupler endpoints are exactly ``c_u`` apart.
    """
    k = ANGULAR_LEGS.index(leg)
    _, tms, _ = _leg_tables(design)
    iv, iw, d, c, t, o, p = tms[k]
    v = position[iv]
    w = position[iw] - o
    pv = v - d * math.sin(delta_u) + t * math.sin(sigma_u)
    pw = w + d * math.cos(delta_u) - t * math.cos(sigma_u) - p * math.cos(rho_u)
    return c * c - (pv * pv + pw * pw)


# ---------------------------------------------------------------------------
# rotational stage (spherical five-bar)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SphericalLegAxes:
    """Unit joint axes of one spherical leg at a solved configuration."""

    leg: str
    u_alpha: tuple[float, float, float]
    u_beta: tuple[float, float, float]
    e: tuple[float, float, float]


def rts_axes(
    design: DesignVector, leg: str, sigma_u: float
) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    """Proximal and intermediate joint axes (u_alpha, u_beta) of one leg.

    ``u_alpha`` is fixed along the leg axis.  ``u_beta`` sits at the arc
    angle ``alpha_u`` from it and rotates about it with ``sigma_u``; at
    ``sigma_u = 0`` it lies in the plane spanned by the leg axis and the
    leg's ``w`` axis:

        u_beta = cos(alpha) u + sin(alpha) (cos(sigma) w - sin(sigma) v)
    """
    k = ANGULAR_LEGS.index(leg)
    _, _, rts = _leg_tables(design)
    iu, iv, iw, sa, ca, _ = rts[k]
    u_alpha = [0.0, 0.0, 0.0]
    u_alpha[iu] = 1.0
    u_beta = [0.0, 0.0, 0.0]
    u_beta[iu] = ca
    u_beta[iw] = sa * math.cos(sigma_u)
    u_beta[iv] = -sa * math.sin(sigma_u)
    return tuple(u_alpha), tuple(u_beta)


def rts_closure(
    psi: float, theta: float, design: DesignVector, leg: str
) -> TrigClosure:
    """Spherical closure of one leg as a trig closure in ``sigma_u``.

    Expanding ``u_beta(sigma) . e = cos(beta_u)`` with the axis convention of
    :func:`rts_axes` gives

        A = -sin(alpha) (e . v),  B = sin(alpha) (e . w),
        C = cos(beta) - cos(alpha) (e . u).
    """
    k = ANGULAR_LEGS.index(leg)
    _, _, rts = _leg_tables(design)
    iu, iv, iw, sa, ca, cb = rts[k]
    e = drill_axis(psi, theta)
    return TrigClosure(a=-sa * e[iv], b=sa * e[iw], c=cb - ca * e[iu])


def rts_residual(
    sigma_u: float, psi: float, theta: float, design: DesignVector, leg: str
) -> float:
    """Signed defect of ``u_beta . e - cos(beta_u)`` (dimensionless)."""
    k = ANGULAR_LEGS.index(leg)
    _, _, rts = _leg_tables(design)
    _, u_beta = rts_axes(design, leg, sigma_u)
    e = drill_axis(psi, theta)
    cb = rts[k][5]
    return u_beta[0] * e[0] + u_beta[1] * e[1] + u_beta[2] * e[2] - cb


# ---------------------------------------------------------------------------
# full cascade
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IkSolution:
    """An accepted inverse-kinematics solution with its audit trail."""

    pose: TaskPose
    joints: JointState
    rts_branches: tuple[int, int]
    tms_branches: tuple[int, int]
    rts_residuals: tuple[float, float]
    tms_residuals: tuple[float, float]
    rts_degenerate: tuple[bool, bool]


def _solve_cascade(pose: TaskPose, design: DesignVector, branches, stats):
    """Run TLS -> RTS -> TMS; return IkSolution or raise UnreachableError.

    ``branches`` is None (search: RTS branch +1 preferred, TMS branch +1) or
    an explicit ``(rts_branches, tms_branches)`` pair of per-leg sign pairs.
    """
    if stats is not None:
        stats["tls"] = stats.get("tls", 0) + 1
    rho = tls_ik(pose.position, design)

    fixed = branches is not None
    if fixed:
        rts_want, tms_want = branches

    sigma: list[float] = []
    delta: list[float] = []
    rts_br: list[int] = []
    tms_br: list[int] = []
    rts_res: list[float] = []
    tms_res: list[float] = []
    degenerate: list[bool] = []

    for k, leg in enumerate(ANGULAR_LEGS):
        rho_u = rho[AXIS_INDEX[leg]]
        if stats is not None:
            stats["rts"] = stats.get("rts", 0) + 1
        closure = rts_closure(pose.psi, pose.theta, design, leg)

        # Candidate sigma values for this leg, ordered by branch preference.
        if closure.magnitude == 0.0:
            if abs(closure.c) > SOLVE_MARGIN:
                raise UnreachableError("rts", leg)
            candidates = [(1 if not fixed else rts_want[k], 0.0, True)]
        else:
            if not closure.solvable():
                raise UnreachableError("rts", leg)
            if fixed:
                order = (rts_want[k],)
            else:
                order = (1, -1)
            candidates = [(b, solve_trig(closure, b), False) for b in order]

        solved = False
        last_err = None
        for b, sig, degen in candidates:
            if stats is not None:
                stats["tms"] = stats.get("tms", 0) + 1
            tclosure = tms_closure(sig, pose.position, rho_u, design, leg)
            tb = tms_want[k] if fixed else 1
            try:
                dlt = solve_trig(tclosure, tb)
            except DegenerateClosureError:
                # d-link tip coincides with the t-link tip circle center for
                # every delta; only possible when d == c and the pivots meet.
                dlt = 0.0
            except UnsolvableClosureError as err:
                last_err = err
                continue
            sigma.append(sig)
            delta.append(dlt)
            rts_br.append(b)
            tms_br.append(tb)
            degenerate.append(degen)
            rts_res.append(rts_residual(sig, pose.psi, pose.theta, design, leg))
            tms_res.append(
                tms_residual(dlt, sig, pose.position, rho_u, design, leg)
            )
            solved = True
            break
        if not solved:
            raise UnreachableError("tms", leg, str(last_err) if last_err else "")

    joints = JointState(rho=rho, delta=(delta[0], delta[1]), sigma=(sigma[0], sigma[1]))
    return IkSolution(
        pose=pose,
        joints=joints,
        rts_branches=(rts_br[0], rts_br[1]),
        tms_branches=(tms_br[0], tms_br[1]),
        rts_residuals=(rts_res[0], rts_res[1]),
        tms_residuals=(tms_res[0], tms_res[1]),
        rts_degenerate=(degenerate[0], degenerate[1]),
    )


def full_ik(
    pose: TaskPose,
    design: DesignVector,
    branches: tuple[tuple[int, int], tuple[int, int]] | None = None,
    stats: dict | None = None,
) -> IkSolution:
    """Inverse kinematics of the full 3T2R pose.

    Stages run in the order TLS, RTS, TMS and short-circuit on the first
    failure.  With ``branches=None`` the solver searches the per-leg branch
    choices (preferring +1) and reports the flags it used; an explicit
    ``(rts_branches, tms_branches)`` pair pins them.

    ``stats``, if given, is filled with per-stage closure evaluation counts
    (used to verify the stage gating).

    Raises:
        UnreachableError: with the first failing stage and leg.
    """
    return _solve_cascade(pose, design, branches, stats)


def reach_local(pose: TaskPose, design: DesignVector) -> int:
    """1 if any branch assignment solves the pose, else 0."""
    try:
        _solve_cascade(pose, design, None, None)
        return 1
    except UnreachableError:
        return 0
