"""Low-rank updates of symmetric eigendecompositions via multi-rank secular equations."""

from symupdate.core import (
    LowRankUpdate,
    SpectralDecomposition,
    SymmetricDense,
    UpdateError,
    UpdateResult,
    apply_update,
    random_instance,
    reconstruct,
)
from symupdate.eigvec import update_decomposition, update_eigenvector
from symupdate.rootfind import update_eigenvalues

__all__ = [
    "LowRankUpdate",
    "SpectralDecomposition",
    "SymmetricDense",
    "UpdateError",
    "UpdateResult",
    "apply_update",
    "random_instance",
    "reconstruct",
    "update_decomposition",
    "update_eigenvalues",
    "update_eigenvector",
]

__version__ = "0.1.0"
