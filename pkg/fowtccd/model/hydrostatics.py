import autograd.numpy as anp

from fowtccd.errors import ModelEnvelopeError
from fowtccd.model.types import HydroParams, LoadSet


def hydrostatic_terms(z_p, theta_p, h: HydroParams):
    """Body-frame hydrostatic surge force, heave force and pitch moment.

    Buoyancy varies linearly with heave over the waterplane area and acts vertically
    in the earth frame. The restoring moment combines the buoyancy-centre offset and
    the waterplane inertia. Both parts derive from a potential, so the field is
    conservative.
    """
    rho_g = h.rho * h.g
    buoyancy = rho_g * (h.V_d - h.waterplane_area * z_p)
    s = anp.sin(theta_p)
    c = anp.cos(theta_p)
    moment = -rho_g * (h.V_d * h.buoyancy_arm + h.waterplane_inertia) * s
    return -buoyancy * s, buoyancy * c, moment


def hydrostatic_potential(z_p, theta_p, h: HydroParams):
    rho_g = h.rho * h.g
    return rho_g * (
        -h.V_d * z_p
        + 0.5 * h.waterplane_area * z_p**2
        - (h.V_d * h.buoyancy_arm + h.waterplane_inertia) * anp.cos(theta_p)
    )


def check_draught(z_p, draft: float, freeboard: float) -> None:
    """Raise if the heave offset lifts the keel out or sinks the deck."""
    z = anp.asarray(z_p)
    if anp.any(z >= draft) or anp.any(z <= -freeboard):
        raise ModelEnvelopeError(
            "Platform fully emerged or fully submerged",
            details={"z_p": float(anp.max(anp.abs(z))), "draft": draft, "freeboard": freeboard},
        )


def hydrostatic_loads(z_p: float, theta_p: float, h: HydroParams, draft: float, freeboard: float) -> LoadSet:
    check_draught(z_p, draft, freeboard)
    F_x, F_z, M = hydrostatic_terms(z_p, theta_p, h)
    return LoadSet(F=(float(F_x), float(F_z)), M=float(M), tag="hs")
