"""Poisson random field calculations for two-species site data.

Thin re-export of the compiled module: expected site-count tables, sampling
fate probabilities, density surfaces, maximum-likelihood fitting, and FASTA
ingestion all live in C++.
"""

from ._prfield import (
    __version__,
    density,
    equilibrium_density,
    expected_table,
    fit,
    ingest_fasta,
    loglik,
    ruin_probability,
    sample_fates,
    scale_map,
)

__all__ = [
    "__version__",
    "density",
    "equilibrium_density",
    "expected_table",
    "fit",
    "ingest_fasta",
    "loglik",
    "ruin_probability",
    "sample_fates",
    "scale_map",
]
