from pydantic import BaseModel, ConfigDict, Field


class SpecialFnConfig(BaseModel):
    """Accuracy controls for the scalar special functions."""

    model_config = ConfigDict(frozen=True)

    rel_tol: float = Field(1e-12, gt=0.0, description="Target relative accuracy")
    max_terms: int = Field(500, ge=1, description="Series/continued-fraction budget")
