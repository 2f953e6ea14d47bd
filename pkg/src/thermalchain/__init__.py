"""Thermal-state entanglement of spin chains.

Three engines compute the operator-space entanglement entropy, block
entropies, mutual information and purities of Gibbs states:

* :mod:`thermalchain.freefermion` for XY chains via Majorana correlations,
* :mod:`thermalchain.mpoengine` for any nearest-neighbour chain by
  imaginary-time evolution of a matrix product operator,
* :mod:`thermalchain.oracle` by dense diagonalization of short chains.
"""

from .models import ChainSpec, MajoranaForm, TermList, build_majorana_form, build_term_list

__all__ = ["ChainSpec", "MajoranaForm", "TermList", "build_majorana_form", "build_term_list"]
__version__ = "0.1.0"
