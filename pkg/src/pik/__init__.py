"""Communication of partial ignorance: optimal communication matrices,
ultraweak majorization and quantum implementations."""
from .commat import CommMatrix, MatrixFormatError, gen_copt, gen_vn, psuc, psuc_prime, tuple_index
from .implsearch import SearchBudget, SearchStatus, SearchVerdict, SystemSpec, find_implementation, operational_dimension
from .linalg import in_convex_hull, rank, solve_lp
from .tables import CommTable, build_table, check_table_consistency
from .ultraweak import Budget, Certificate, Verdict, check_certificate, majorizes

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "Certificate",
    "CommMatrix",
    "CommTable",
    "MatrixFormatError",
    "SearchBudget",
    "SearchStatus",
    "SearchVerdict",
    "SystemSpec",
    "Verdict",
    "build_table",
    "check_certificate",
    "check_table_consistency",
    "find_implementation",
    "gen_copt",
    "gen_vn",
    "in_convex_hull",
    "majorizes",
    "operational_dimension",
    "psuc",
    "psuc_prime",
    "rank",
    "solve_lp",
    "tuple_index",
]
