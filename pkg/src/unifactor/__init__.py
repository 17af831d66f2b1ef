"""Low-rank covariance decompositions: PCA, factor analysis and models in between."""
from ._backend import BACKEND
from .errors import (
    AsymmetryError,
    ConvergenceError,
    DegenerateBasisError,
    DegenerateDataError,
    DimensionError,
    InfeasibleStartError,
    NegativeSpectrumError,
    NonOrthonormalBasisError,
    ParseError,
    RankCollapseWarning,
    RankDeficiencyError,
    SingularModelError,
    UnifactorError,
    ValidationError,
)
from .fa import FaFit, fit_fa_ls, fit_fa_ml, fit_fa_pls, regularization_sweep
from .io import parse_data_csv, parse_matrix_csv
from .matrix import (
    DataMatrix,
    Decomposition,
    EigenSystem,
    FitReport,
    SymmetricMatrix,
    covariance_from_data,
    cumulative_proportion,
    eigendecompose,
    eigenvalues,
    is_psd,
    loewner_leq,
    numeric_rank,
    subspace_contains,
)
from .objectives import ObjectiveSpec, evaluate
from .path import PathConfig, PathPoint, default_grid, emit_path_csv, solve_path
from .pca import PcaReport, pca_report, solve_pca
from .pcfm import (
    PcfmFit,
    QpProblem,
    build_qp,
    fit_pcfm,
    principal_component_index,
    solve_nnqp,
)
from .search import SearchProblem, SearchResult, search_loading, unidirectional_search

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AsymmetryError", "ConvergenceError", "DegenerateBasisError", "DegenerateDataError",
    "DimensionError", "InfeasibleStartError", "NegativeSpectrumError",
    "NonOrthonormalBasisError", "ParseError", "RankCollapseWarning", "RankDeficiencyError",
    "SingularModelError", "UnifactorError", "ValidationError",
    "FaFit", "fit_fa_ls", "fit_fa_ml", "fit_fa_pls", "regularization_sweep",
    "parse_data_csv", "parse_matrix_csv",
    "DataMatrix", "Decomposition", "EigenSystem", "FitReport", "SymmetricMatrix",
    "covariance_from_data", "cumulative_proportion", "eigendecompose", "eigenvalues",
    "is_psd", "loewner_leq", "numeric_rank", "subspace_contains",
    "ObjectiveSpec", "evaluate",
    "PathConfig", "PathPoint", "default_grid", "emit_path_csv", "solve_path",
    "PcaReport", "pca_report", "solve_pca",
    "PcfmFit", "QpProblem", "build_qp", "fit_pcfm", "principal_component_index", "solve_nnqp",
    "SearchProblem", "SearchResult", "search_loading", "unidirectional_search",
]
