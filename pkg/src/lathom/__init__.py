"""lathom: exact lattice homology of negative-definite plumbing forests.

The package computes, over the ring F2[U]:

* lattice homology of a negative-definite plumbing forest in its minus,
  hat, bar and U-inverted flavours, decomposed by spin-c structure with
  exact Maslov and delta gradings (`lathom.lattice`),
* the Alexander-style filtration induced by a distinguished unframed
  vertex, master knot complexes, their associated graded homology and
  connected sums (`lathom.knotfilt`),
* surgery mapping cones along the distinguished vertex, cross-validated
  against the direct computation on the filled graph (`lathom.surgery`),
* the blow-up/blow-down move calculus with explicit chain homotopies and
  invariance checking (`lathom.moves`),

together with the underlying exact algebra (`lathom.algebra`), graph
containers and spin-c bookkeeping (`lathom.plumbing`), and a command line
interface (`lathom.cli`).
"""

from .algebra import (
    GradedModule,
    Rat,
    Torsion,
    Tower,
    UMatrix,
    UPoly,
    module_from_complex,
    smith_normal_form,
)
from .plumbing import FramedForest

__all__ = [
    "FramedForest",
    "GradedModule",
    "Rat",
    "Torsion",
    "Tower",
    "UMatrix",
    "UPoly",
    "module_from_complex",
    "smith_normal_form",
]

__version__ = "0.1.0"
