"""Generalized mass, added mass, quadratic velocity and gravity terms of the 4-DOF model.

Generalized coordinates are the body-frame surge and heave velocities, the pitch rate
and the rotor speed. The body frame is attached to the platform centre of gravity with
x pointing downwind and z along the tower axis.
"""

import autograd.numpy as anp
import numpy as np

from fowtccd.model.types import HydroParams, RigidBodyInventory


def mass_components(inv: RigidBodyInventory):
    """Return (m_T, M_13, M_26, M_55)."""
    m_T = inv.total_mass
    M_13 = inv.D_r * (inv.m_r + inv.m_nc) + inv.m_t * inv.D_t
    M_26 = inv.d_nc * inv.m_nc - inv.d_r * inv.m_r
    M_55 = (
        inv.total_pitch_inertia
        + inv.m_r * (inv.D_r**2 + inv.d_r**2)
        + inv.m_nc * (inv.D_r**2 + inv.d_nc**2)
        + inv.D_t**2 * inv.m_t
    )
    return m_T, M_13, M_26, M_55


def assemble_mass_matrix(inv: RigidBodyInventory) -> np.ndarray:
    m_T, M_13, M_26, M_55 = mass_components(inv)
    return np.array(
        [
            [m_T, 0.0, M_13, 0.0],
            [0.0, m_T, -M_26, 0.0],
            [M_13, -M_26, M_55, 0.0],
            [0.0, 0.0, 0.0, inv.I_rx],
        ]
    )


def added_mass_components(h: HydroParams):
    """Return (A_11, A_22, A_13, A_33)."""
    A_11 = h.C_am * h.rho * h.V_d
    A_22 = h.C_am * (h.rho * np.pi * h.d_1**3 / 12)
    A_13 = A_11 * (h.a_cv - h.a_pf)
    A_33 = h.C_am * h.I_add
    return A_11, A_22, A_13, A_33


def assemble_added_mass(h: HydroParams) -> np.ndarray:
    A_11, A_22, A_13, A_33 = added_mass_components(h)
    return np.array(
        [
            [A_11, 0.0, A_13, 0.0],
            [0.0, A_22, 0.0, 0.0],
            [A_13, 0.0, A_33, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ]
    )


def coriolis_loads(velocities, M_sys, A_11):
    """(S M_sys + C_A) v for a batch of velocity rows.

    Args:
        velocities: array (..., 4) of [v_x, v_z, omega_y, Omega].
        M_sys: 4x4 generalized mass matrix.
        A_11: surge added mass.

    Returns:
        Array (..., 4) of quadratic velocity loads; the rotor row is zero.
    """
    v_x = velocities[..., 0]
    v_z = velocities[..., 1]
    w_y = velocities[..., 2]
    p = anp.dot(velocities, anp.transpose(M_sys))
    zero = anp.zeros_like(v_x)
    # the pitch row of C_A v cancels identically
    return anp.stack(
        [
            w_y * p[..., 1] + A_11 * v_z * w_y,
            -w_y * p[..., 0] - A_11 * v_x * w_y,
            v_z * p[..., 0] - v_x * p[..., 1],
            zero,
        ],
        axis=-1,
    )


def gravity_loads(theta_p, inv: RigidBodyInventory, g: float = 9.81):
    """Body-frame gravity loads [F_x, F_z, M, 0] for a pitch angle (scalar or array)."""
    m_T, M_13, M_26, _ = mass_components(inv)
    s = anp.sin(theta_p)
    c = anp.cos(theta_p)
    return anp.stack(
        [
            m_T * g * s,
            -m_T * g * c,
            g * s * M_13 + g * c * M_26,
            anp.zeros_like(s),
        ],
        axis=-1,
    )
