"""Log-determinants of Wigner random matrices.

Samplers for Wigner and iid ensembles, the tridiagonal model and its O(n)
determinant recursion, dense log-determinant baselines, exact determinant
moments, resolvent perturbation numerics and statistical checks.
"""

__version__ = "0.1.0"

from .ensembles import (  # noqa: E402
    AtomDistribution,
    CatalogError,
    ComplexAtom,
    EnsembleSpec,
    make_ensemble,
    replicate_rng,
    sample_matrix,
    verify_matching,
)
from .tridiag import (  # noqa: E402
    DeterminantTrace,
    TridiagonalModel,
    det_recursion_exact,
    householder_tridiagonalize,
    logdet_trace,
    sample_tridiagonal,
)
from .dense_logdet import logdet_general, logdet_hermitian, logdet_shifted, standardize_logdet  # noqa: E402
from .decomposition import h_value, martingale_report, telescoping_check, weyl_sum  # noqa: E402
from .moments import first_moment_exact, second_moment_exact  # noqa: E402
from .stats import ks_one_sample, ks_two_sample, summary  # noqa: E402
