import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import cho_solve, solve_triangular


class CorrMatrix(BaseModel):
    """Correlation matrix with its cached Cholesky factor and log-determinant."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    sigma: np.ndarray
    cholesky_lower: np.ndarray
    log_det: float
    jittered: bool = False  # diagonal jitter was needed to factorize

    @property
    def n(self) -> int:
        return int(self.sigma.shape[0])

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Return Σ⁻¹ b."""
        return cho_solve((self.cholesky_lower, True), b)

    def whiten(self, v: np.ndarray) -> np.ndarray:
        """Return L⁻¹ v, so that ‖L⁻¹ v‖² = vᵀ Σ⁻¹ v."""
        return solve_triangular(self.cholesky_lower, v, lower=True)

    def quad_form(self, v: np.ndarray) -> float:
        w = self.whiten(v)
        return float(w @ w)
