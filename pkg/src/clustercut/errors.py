"""Exception types; each carries a stable machine-readable ``code``."""


class ClusterCutError(Exception):
    code = "error"


class CircuitParseError(ClusterCutError, ValueError):
    code = "parse_error"


class OracleTooLarge(ClusterCutError):
    code = "oracle_too_large"


class WidthExceeded(ClusterCutError):
    code = "width_exceeded"


class BudgetExceeded(ClusterCutError):
    code = "budget_exceeded"


class NotDecomposable(ClusterCutError):
    code = "not_decomposable"


class ClustersNotSeparable(ClusterCutError):
    code = "clusters_not_separable"


class InfeasibleClustering(ClusterCutError):
    code = "infeasible_clustering"
