"""Velocity model: the seven Jacobian blocks and their 3T2R assembly.

Differentiating the three stage closures at a solved configuration yields,
per angular leg, the scalar relation

    J_rho rho_dot + J_delta delta_dot = J_AV v + J_sigma sigma_dot

for the transmitting stage and

    J_AS sigma_dot = J_AP omega

for the rotational stage, while the translational stage gives
``v = J_LV rho_dot`` with ``J_LV`` diagonal.  Eliminating ``sigma_dot``
stacks everything into one five-row linear system

    [I3    0  ] [rho_dot  ]   [J_LV^-1   0              ] [v    ]
    [J_rho J_delta] [delta_dot] = [J_AV   J_sigma J_AS^-1 J_AP] [omega]

whose condition numbers (block by block) drive the dexterity index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import AXIS_INDEX, DesignVector, drill_axis, drill_axis_partials
from .kinematics import ANGULAR_LEGS, IkSolution, rts_axes

__all__ = [
    "JacobianSet",
    "SingularConfigurationError",
    "j_lv",
    "tms_velocity_blocks",
    "rts_velocity_blocks",
    "assemble",
    "build_jacobians",
    "inverse_velocity",
]

#: |cos rho| below this marks the translational stage singular.
LV_SINGULAR_TOL = 1e-9
#: Scaled |det| threshold for the 2x2 blocks and the spherical diagonal.
DET_SINGULAR_TOL = 1e-12
#: |sin theta| below this makes the psi rate direction meaningless.
PARAMETERIZATION_TOL = 1e-12

#: Canonical ordering of the singular-flag names.
BLOCK_NAMES = ("j_lv", "j_av", "j_sigma", "j_as", "j_ap", "j_rho", "j_delta")


class SingularConfigurationError(Exception):
    """A required block is singular (or the axis parameterization is).

    ``block`` names the offender: one of the Jacobian block ids or
    ``"parameterization"`` for the theta = 0 drill-axis degeneracy.
    """

    def __init__(self, block: str, message: str = ""):
        self.block = block
        super().__init__(message or f"singular block: {block}")


@dataclass(frozen=True)
class JacobianSet:
    """All seven blocks at one configuration, plus the assembled system.

    ``task_side`` (5x6) and ``joint_side`` (5x5) are None whenever the
    blocks they require inverting (translational diagonal, spherical
    diagonal) are flagged singular.  Arrays are read-only.
    """

    j_lv: np.ndarray  # 3x3 diagonal
    j_rho: np.ndarray  # 2x2 diagonal
    j_delta: np.ndarray  # 2x2 diagonal
    j_av: np.ndarray  # 2x3
    j_sigma: np.ndarray  # 2x2 diagonal
    j_as: np.ndarray  # 2x2 diagonal
    j_ap: np.ndarray  # 2x3
    task_side: np.ndarray | None  # 5x6
    joint_side: np.ndarray | None  # 5x5
    singular_blocks: tuple[str, ...]

    def block(self, name: str) -> np.ndarray:
        return getattr(self, name)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def j_lv(rho: tuple[float, float, float], design: DesignVector) -> np.ndarray:
    """Translational Jacobian diag(-p_u cos rho_u), mm/rad.

    Valid for |rho_u| < pi/2; the diagonal vanishes at the fold.
    """
    return _freeze(np.diag([-design.p[i] * math.cos(rho[i]) for i in range(3)]))


def _tms_geometry(config: IkSolution, design: DesignVector):
    """Per-leg (P, Q, d, t, p, rho, delta, sigma) of the four-bar closure."""
    out = []
    pos = config.pose.position
    for k, leg in enumerate(ANGULAR_LEGS):
        iu = AXIS_INDEX[leg]
        iv = (iu + 1) % 3
        iw = (iu + 2) % 3
        d = design.d[k]
        t = design.t[k]
        p = design.p[k]
        rho = config.joints.rho[iu]
        delta = config.joints.delta[k]
        sigma = config.joints.sigma[k]
        big_v = pos[iv] + t * math.sin(sigma)
        big_w = (pos[iw] - design.o[k]) - t * math.cos(sigma) - p * math.cos(rho)
        pp = big_v - d * math.sin(delta)
        qq = big_w + d * math.cos(delta)
        out.append((pp, qq, d, t, p, rho, delta, sigma, iv, iw))
    return out


def tms_velocity_blocks(
    config: IkSolution, design: DesignVector
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(J_rho, J_delta, J_AV, J_sigma) of the transmitting-stage relation.

    Rows are the partial derivatives of each leg's squared-distance closure,
    arranged as ``J_rho rho_dot + J_delta delta_dot = J_AV v + J_sigma
    sigma_dot``.  Each row touches only its own leg's variables, so J_rho,
    J_delta and J_sigma are diagonal and J_AV has one zero column per row
    (the leg-axis coordinate does not enter the closure).
    """
    geo = _tms_geometry(config, design)
    jr = np.zeros((2, 2))
    jd = np.zeros((2, 2))
    js = np.zeros((2, 2))
    jav = np.zeros((2, 3))
    for k, (pp, qq, d, t, p, rho, delta, sigma, iv, iw) in enumerate(geo):
        jr[k, k] = 2.0 * qq * p * math.sin(rho)
        jd[k, k] = -2.0 * d * (pp * math.cos(delta) + qq * math.sin(delta))
        js[k, k] = -2.0 * t * (pp * math.cos(sigma) + qq * math.sin(sigma))
        jav[k, iv] = -2.0 * pp
        jav[k, iw] = -2.0 * qq
    return _freeze(jr), _freeze(jd), _freeze(jav), _freeze(js)


def rts_velocity_blocks(
    config: IkSolution, design: DesignVector
) -> tuple[np.ndarray, np.ndarray]:
    """(J_AS, J_AP) of the spherical relation J_AS sigma_dot = J_AP omega.

    J_AS is diag((u_alpha x u_beta) . e); row u of J_AP is (u_beta x e)^T,
    orthogonal to the drill axis by construction.
    """
    e = np.array(drill_axis(config.pose.psi, config.pose.theta))
    jas = np.zeros((2, 2))
    jap = np.zeros((2, 3))
    for k, leg in enumerate(ANGULAR_LEGS):
        u_alpha, u_beta = rts_axes(design, leg, config.joints.sigma[k])
        ua = np.array(u_alpha)
        ub = np.array(u_beta)
        jas[k, k] = float(np.dot(np.cross(ua, ub), e))
        jap[k] = np.cross(ub, e)
    return _freeze(jas), _freeze(jap)


def _assemble_raw(jlv, jrho, jdelta, jav, jsigma, jas, jap):
    task = np.zeros((5, 6))
    for i in range(3):
        task[i, i] = 1.0 / jlv[i, i]
    task[3:, :3] = jav
    jas_inv = np.diag([1.0 / jas[0, 0], 1.0 / jas[1, 1]])
    task[3:, 3:] = jsigma @ jas_inv @ jap
    joint = np.zeros((5, 5))
    joint[0, 0] = joint[1, 1] = joint[2, 2] = 1.0
    joint[3, 0] = jrho[0, 0]
    joint[4, 1] = jrho[1, 1]
    joint[3:, 3:] = jdelta
    return _freeze(task), _freeze(joint)


def _det2_singular(m: np.ndarray) -> bool:
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    scale = max(1.0, float(np.max(np.abs(m))) ** 2)
    return abs(det) < DET_SINGULAR_TOL * scale


def build_jacobians(config: IkSolution, design: DesignVector) -> JacobianSet:
    """All seven blocks plus the assembled system at one configuration.

    Sets singular flags (translational fold, vanishing 2x2 determinants,
    vanishing spherical diagonal) and leaves the assembled matrices as None
    when their construction would divide by a flagged diagonal.
    """
    jlv = j_lv(config.joints.rho, design)
    jrho, jdelta, jav, jsigma = tms_velocity_blocks(config, design)
    jas, jap = rts_velocity_blocks(config, design)

    flagged = []
    if any(
        abs(math.cos(config.joints.rho[i])) < LV_SINGULAR_TOL for i in range(3)
    ):
        flagged.append("j_lv")
    if _det2_singular(jsigma):
        flagged.append("j_sigma")
    if abs(jas[0, 0]) < DET_SINGULAR_TOL or abs(jas[1, 1]) < DET_SINGULAR_TOL:
        flagged.append("j_as")
    if _det2_singular(jdelta):
        flagged.append("j_delta")

    if "j_lv" in flagged or "j_as" in flagged:
        task, joint = None, None
    else:
        task, joint = _assemble_raw(jlv, jrho, jdelta, jav, jsigma, jas, jap)

    return JacobianSet(
        j_lv=jlv,
        j_rho=jrho,
        j_delta=jdelta,
        j_av=jav,
        j_sigma=jsigma,
        j_as=jas,
        j_ap=jap,
        task_side=task,
        joint_side=joint,
        singular_blocks=tuple(flagged),
    )


def assemble(blocks: JacobianSet) -> tuple[np.ndarray, np.ndarray]:
    """(task-side 5x6, joint-side 5x5) from an existing block set.

    Raises:
        SingularConfigurationError: when the translational or spherical
            diagonal cannot be inverted.
    """
    for name in ("j_lv", "j_as"):
        if name in blocks.singular_blocks:
            raise SingularConfigurationError(name)
    return _assemble_raw(
        blocks.j_lv,
        blocks.j_rho,
        blocks.j_delta,
        blocks.j_av,
        blocks.j_sigma,
        blocks.j_as,
        blocks.j_ap,
    )


def inverse_velocity(
    task_rate: tuple[tuple[float, float, float], float, float],
    config: IkSolution,
    design: DesignVector,
) -> tuple[tuple[float, float, float], tuple[float, float]]:
    """Joint rates (rho_dot, delta_dot) realizing a task-space rate.

    ``task_rate`` is ``(v, psi_dot, theta_dot)`` with v in mm/s and the
    angle rates in rad/s.  The angular velocity is lifted from the axis
    rates as ``omega = e x e_dot`` (the zero-spin representative; any spin
    about the drill axis is annihilated by the spherical rows).

    Raises:
        SingularConfigurationError: naming ``"parameterization"`` at
            theta = 0, or the singular block otherwise.
    """
    v, psi_dot, theta_dot = task_rate
    if abs(math.sin(config.pose.theta)) < PARAMETERIZATION_TOL:
        raise SingularConfigurationError(
            "parameterization",
            "psi rate is undefined at theta = 0 (drill axis at the pole)",
        )
    blocks = build_jacobians(config, design)
    for name in ("j_lv", "j_as", "j_delta"):
        if name in blocks.singular_blocks:
            raise SingularConfigurationError(name)

    e = np.array(drill_axis(config.pose.psi, config.pose.theta))
    e_psi, e_theta = drill_axis_partials(config.pose.psi, config.pose.theta)
    e_dot = np.array(e_psi) * psi_dot + np.array(e_theta) * theta_dot
    omega = np.cross(e, e_dot)

    rate6 = np.concatenate([np.asarray(v, dtype=float), omega])
    rhs = blocks.task_side @ rate6
    joint_rates = np.linalg.solve(blocks.joint_side, rhs)
    return (
        (float(joint_rates[0]), float(joint_rates[1]), float(joint_rates[2])),
        (float(joint_rates[3]), float(joint_rates[4])),
    )
