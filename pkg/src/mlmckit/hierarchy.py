"""Resolution ladder and degrees-of-freedom accounting.

Level 1 is the finest resolution; each coarser level doubles the mesh
spacing, so the work per solve drops by 8x per level (three spatial
dimensions).  All load bookkeeping elsewhere in the package is expressed
relative to one finest-level solve via :func:`relative_dof`.
"""

from dataclasses import dataclass

REFINEMENT_FACTOR = 2
DOF_EXPONENT = 3


@dataclass(frozen=True)
class ResolutionHierarchy:
    """Geometric ladder of mesh resolutions.

    Parameters
    ----------
    r1 : float
        Finest mesh spacing (level 1), in whatever unit the solver uses.
    C1 : float
        Proportionality constant between r^-3 and the DOF count.
    """

    r1: float
    C1: float = 1.0
    refinement_factor: int = REFINEMENT_FACTOR
    dof_exponent: int = DOF_EXPONENT

    def __post_init__(self):
        if not self.r1 > 0:
            raise ValueError(f"r1 must be positive, got {self.r1}")
        if not self.C1 > 0:
            raise ValueError(f"C1 must be positive, got {self.C1}")
        # Fixed laws in this version: the planner's sizing formulas bake in
        # doubling meshes and cubic DOF growth, so other values are rejected
        # rather than silently producing inconsistent plans.
        if self.refinement_factor != REFINEMENT_FACTOR:
            raise ValueError(
                f"refinement_factor is fixed at {REFINEMENT_FACTOR}, "
                f"got {self.refinement_factor}"
            )
        if self.dof_exponent != DOF_EXPONENT:
            raise ValueError(
                f"dof_exponent is fixed at {DOF_EXPONENT}, got {self.dof_exponent}"
            )

    def to_json_dict(self):
        return {"r1": self.r1, "C1": self.C1}

    @classmethod
    def from_json_dict(cls, d):
        return cls(r1=float(d["r1"]), C1=float(d.get("C1", 1.0)))


def _check_level(level):
    if not isinstance(level, int) or isinstance(level, bool) or level < 1:
        raise ValueError(f"level must be an integer >= 1, got {level!r}")


def resolution_at_level(h, level):
    """Mesh spacing at ``level``: r1 doubles per coarsening step."""
    _check_level(level)
    return h.r1 * 2.0 ** (level - 1)


def relative_dof(level):
    """Work of one solve at ``level`` relative to a finest-level solve.

    Exactly 8^-(level-1); a power of two, so the float is exact until
    underflow.
    """
    _check_level(level)
    return 8.0 ** (-(level - 1))


def dof_at_level(h, level):
    """Absolute degrees of freedom C1 * r_level^-3."""
    _check_level(level)
    return h.C1 * resolution_at_level(h, level) ** -DOF_EXPONENT
