"""Relaxed incremental proximal gradient and row-action reconstruction."""

from ._core import (
    CsrMatrix,
    __version__,
    alpha,
    beta,
    csr_from_triplets,
    make_problem,
    prox,
    replay,
    shepp_logan,
    solve,
    solve_tv_ls,
    tv_seminorm,
)

__all__ = [
    "CsrMatrix",
    "__version__",
    "alpha",
    "beta",
    "csr_from_triplets",
    "from_scipy",
    "make_problem",
    "prox",
    "replay",
    "shepp_logan",
    "solve",
    "solve_tv_ls",
    "tv_seminorm",
]


def from_scipy(matrix):
    """Convert any scipy.sparse matrix to a canonical CsrMatrix."""
    coo = matrix.tocoo()
    return csr_from_triplets(coo.shape[0], coo.shape[1], coo.row, coo.col, coo.data)
