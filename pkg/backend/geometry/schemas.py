"""
Pydantic schemas for run configuration and verification reports
"""

import math
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import settings


class Command(str, Enum):
    transport = "transport"
    holonomy = "holonomy"
    evaluate = "evaluate"
    verify = "verify"
    classify = "classify"
    glue = "glue"


class RunConfig(BaseModel):
    """Everything a CLI run depends on; identical configs give identical reports"""
    command: Command
    inputs: List[str] = []
    tol: Optional[float] = Field(None, gt=0)
    grid: Optional[int] = Field(None, gt=0)
    report: Optional[str] = None
    seed: int = settings.DEFAULT_SEED
    oriented: bool = False


# Residual reports

class ResidualReport(BaseModel):
    """One numerical check with its tolerance echoed"""
    name: str
    residual: float
    tolerance: float
    passed: bool
    detail: Optional[str] = None

    model_config = ConfigDict(from_attributes=True)


class CompatibilityReport(BaseModel):
    """Max Frobenius norm of d_mu beta - omega_mu^T beta - beta omega_mu over a grid"""
    max_residual: float
    tolerance: float
    passed: bool
    worst_point: List[float]
    worst_direction: int
    samples: int

    model_config = ConfigDict(from_attributes=True)


class PreflightReport(BaseModel):
    """Hypotheses of the multiplicativity proposition checked on an oracle"""
    passed: bool
    checks: List[ResidualReport]
    violations: List[str]


class CriterionResult(BaseModel):
    """One row of the acceptance table"""
    criterion: int
    name: str
    cases: int
    max_residual: float
    tolerance: float
    passed: bool
    detail: str = ""
    seconds: float = 0.0


class GlueReport(BaseModel):
    """Comparison of a glued family with both presentations on the overlap"""
    grid: List[float]
    overlap: List[float]
    partition_error: float
    max_deviation: float
    tolerance: float
    passed: bool


class ReconstructionReport(BaseModel):
    """Output of the classification pipeline"""
    oriented: bool
    grid: List[List[float]]
    fd_step: float
    steps: List[float]
    omega: List[List[List[List[float]]]] = Field(..., description="[point][direction] -> n x n")
    beta: Optional[List[List[List[float]]]] = None
    signature: Optional[List[int]] = None
    connection_errors: List[float] = []
    residual_pairs: List[List[float]] = []
    order_estimates: List[float] = []
    fitted_order: Optional[float] = None
    compatibility_residual: Optional[float] = None
    sample_kinds: List[str] = []
    deviations: List[float] = []
    max_deviation: float
    tolerance: float
    passed: bool
    note: str = ""

    @model_validator(mode="after")
    def orders_match_pairs(self):
        if len(self.order_estimates) != len(self.residual_pairs):
            raise ValueError("one order estimate per residual pair required")
        for order, (coarse, fine) in zip(self.order_estimates, self.residual_pairs):
            if coarse > 0 and fine > 0 and not math.isnan(order):
                expected = math.log(coarse / fine) / math.log(2.0)
                if abs(order - expected) > 1e-9 * max(1.0, abs(expected)):
                    raise ValueError("order estimate inconsistent with its residual pair")
        return self
