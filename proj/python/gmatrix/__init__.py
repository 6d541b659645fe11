"""Google-matrix spectral analysis of directed networks.

The heavy lifting lives in the compiled extension ``gmatrix._core``:
network generation, the sparse Google operator, PageRank power iteration,
dense complex spectra with right eigenvectors, and the localization
observables (IPR, relaxation-rate densities, finite-size scaling fits).
"""

from gmatrix._core import (
    DirectedGraph,
    GoogleMatrix,
    __version__,
    ab_generate,
    degree_stats,
    density_w,
    fit_beta,
    fit_tail,
    full_spectrum,
    gamma_of,
    ipr,
    load_edge_list,
    load_edge_list_file,
    pagerank,
    rewire_preserving_degrees,
    run_scan,
    scaling_fit,
)

__all__ = [
    "DirectedGraph",
    "GoogleMatrix",
    "__version__",
    "ab_generate",
    "degree_stats",
    "density_w",
    "fit_beta",
    "fit_tail",
    "full_spectrum",
    "gamma_of",
    "ipr",
    "load_edge_list",
    "load_edge_list_file",
    "pagerank",
    "rewire_preserving_degrees",
    "run_scan",
    "scaling_fit",
]
