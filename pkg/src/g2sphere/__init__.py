"""Invariant G2-structures on the 7-sphere viewed as Sp(2)/Sp(1).

Modules
-------
algebra_core
    Lie algebra, exterior algebra and Hodge star on the isotropy complement.
g2_structures
    Parameter families, the 3-form and its induced metric.
torsion
    Torsion forms, the full torsion tensor and closed forms.
connection
    Levi-Civita connection and the divergence of the torsion.
flow
    Isometric flow on a unit quaternion.
stability
    Critical classes, Hessians, index and nullity.
cli
    The ``g2`` command-line tool.
"""

from .errors import DomainError, G2Error, NotCriticalError, StepRejected
from .g2_structures import AnsatzParams, G2Params, GeneralParams
from .torsion import TorsionData, norm_sq, torsion_forms

__version__ = "0.1.0"

__all__ = [
    "AnsatzParams", "G2Params", "GeneralParams", "TorsionData", "torsion_forms",
    "norm_sq", "G2Error", "DomainError", "NotCriticalError", "StepRejected",
]
