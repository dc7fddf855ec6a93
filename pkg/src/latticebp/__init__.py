"""Soft-output lattice detection by belief propagation on a label-code Tanner graph.

Modules
-------
realmap    complex/real isomorphisms and the real transmission model
lattice    Gram-Schmidt coordinates, label code, dual code, coset search
tanner     Tanner graph of the dual generators
bp         initializations and non-binary belief propagation
extrinsic  total and extrinsic coordinate APPs over the region points
equalizer  unit-gain MMSE and soft interference cancellation
socode     superorthogonal space-time code and matched filtering
sim        fading channels, interleaving, receivers and FER sweeps
"""

from .lattice import LabeledLattice, Lattice, d4_qpsk_lattice
from .socode import SuperCode
from .tanner import build_graph

__version__ = "0.1.0"

__all__ = ["Lattice", "LabeledLattice", "SuperCode", "build_graph", "d4_qpsk_lattice"]
