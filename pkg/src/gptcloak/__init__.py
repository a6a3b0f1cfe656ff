"""Contracted GPTs of concentric layered conductivity structures and
design of N-GPTs-vanishing (near-cloaking) coatings."""

from gptcloak.structure import (
    ContrastVector,
    LayerStructure,
    StructureError,
    equidistant_radii,
    eta_core_for_sigma,
    eta_from_sigma,
    proportional_radii,
    sigma_from_eta,
)
from gptcloak.cgpt_core import (
    CgptError,
    CgptVector,
    FieldCoefficients,
    Jacobian,
    ResonanceError,
    cgpt,
    cgpt_vector,
)

__all__ = [
    "CgptError",
    "CgptVector",
    "ContrastVector",
    "FieldCoefficients",
    "Jacobian",
    "LayerStructure",
    "ResonanceError",
    "StructureError",
    "cgpt",
    "cgpt_vector",
    "equidistant_radii",
    "eta_core_for_sigma",
    "eta_from_sigma",
    "proportional_radii",
    "sigma_from_eta",
]

__version__ = "0.1.0"
