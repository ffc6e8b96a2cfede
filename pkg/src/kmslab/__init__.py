"""kmslab: a finite-truncation laboratory for thermal states of fermion systems.

Subpackages by capability:

* ``kmslab.fock`` — dense CAR matrices, Gibbs states, reduced density matrices.
* ``kmslab.kms`` — the equilibrium inequality, its gap report, witnesses, and
  the Fermi-Dirac occupation sandwich.
* ``kmslab.decay`` — high-frequency occupation bounds and their decay laws.
* ``kmslab.toychain`` — nearest-neighbor qudit chain with level-growth
  diagnostics tying measured occupations to the decay bounds.
* ``kmslab.phasespace`` — Gaussian coherent-state kernels, interaction-norm
  integrals, cosine-basis symbols, cutoff removal, positivity checks.
* ``kmslab.quasifree`` — quasifree states from a one-particle symbol, pinching,
  relative entropy, trace-class certificates.
* ``kmslab.cli`` — experiment driver writing CSV tables and JSON summaries.
"""

from . import decay, fock, kms, phasespace, quasifree, tensor, toychain
from .fock import (
    FockOperator,
    GibbsEnsemble,
    annihilator,
    creator,
    expectation,
    gibbs_state,
    number_operator,
    partial_trace,
    smeared_annihilator,
)
from .kms import fermi_dirac_sandwich, kms_gap, kms_violation_witness
from .decay import occupation_bound, solve_y_min
from .quadrature import QuadratureError

__version__ = "0.1.0"
