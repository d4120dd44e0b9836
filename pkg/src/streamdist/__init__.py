"""streamdist: a desk-scale laboratory for memory-bounded streaming
distinguishers of pseudorandom bit sources.

Subpackages cover exact GF(2) linear algebra and samplers (`bitvec`),
boolean predicates with exact Fourier spectra (`predicates`), the
distinguishing-problem families (`sources`), streaming distinguishers
with auditable memory accounting (`distinguishers`), explicit
read-once branching programs with exact success probabilities
(`robp`), distinguisher-to-learner reductions (`reductions`),
Fourier/Krawtchouk oracles and Monte Carlo estimation (`analysis`),
and a reproducible experiment CLI (`cli`).
"""

__version__ = "0.1.0"

from ._kernels import HAVE_EXT

__all__ = ["__version__", "HAVE_EXT"]
