"""Exception types shared across the package."""


class MeshError(ValueError):
    """Invalid mesh file or mesh violating a structural invariant."""


class IllPosedSteinError(ArithmeticError):
    """Stein equation with an eigenvalue product too close to -1."""

    def __init__(self, eigenvalue_product):
        self.eigenvalue_product = eigenvalue_product
        super().__init__(
            "ill-posed Stein equation: eigenvalue product "
            f"{eigenvalue_product} is too close to -1"
        )


class NotPositiveDefiniteError(ArithmeticError):
    """Cholesky factorization hit a non-positive pivot."""


class RankDeficiencyError(ValueError):
    """Orthonormalization found a numerically dependent column."""

    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} is numerically dependent on earlier columns")


class DivergenceError(RuntimeError):
    """Solver state became non-finite or exceeded the divergence guard."""

    def __init__(self, iteration):
        self.iteration = iteration
        super().__init__(f"divergence detected at iteration {iteration}")
