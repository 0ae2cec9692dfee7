from .linalg import (
    DimensionMismatch,
    NotPositiveDefinite,
    NotSymmetric,
    SharedEigenvalues,
    SingularSystem,
    is_positive_definite,
    max_eig,
    min_eig,
    spd_inverse,
    sylvester_residual,
    sylvester_solve,
    sym,
    young_bound_holds,
)
from .lmi import (
    AffineMatrixExpr,
    Constraint,
    FeasibilityProblem,
    FeasibilityResult,
    Status,
    Variable,
    matrix,
    negative,
    positive,
    scalar,
    solve_feasibility,
    symmetric,
    worst_eigenvalue,
)
