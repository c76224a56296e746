from enum import Enum
from typing import Any, Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from hirotalax.core.errors import MissingEntryError
from hirotalax.core.specfun import SpectralFunction


class Topology(str, Enum):
    PERIODIC = "periodic"
    OPEN = "open"


class ChainSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    sites: int = Field(..., ge=1, description="Number of spin-1/2 sites N.")
    topology: Topology = Field(
        Topology.PERIODIC, description="Periodic (closed) or open boundary conditions."
    )
    alpha: float = Field(
        1.0, description="Right boundary parameter; enters the Hamiltonian as 1/alpha."
    )
    beta: float = Field(
        1.0, description="Left boundary parameter; enters the Hamiltonian as 1/beta."
    )
    xi: float = Field(
        0.0,
        description=(
            "Off-diagonal left boundary parameter. The left K-matrix uses "
            "xi_plus = xi_minus = xi; xi = 0 keeps the U(1) symmetry."
        ),
    )

    @model_validator(mode="after")
    def check_boundary(self):
        if self.topology == Topology.OPEN:
            if self.alpha == 0:
                raise ValueError("alpha must be nonzero for an open chain")
            if self.beta == 0:
                raise ValueError("beta must be nonzero for an open chain")
        return self

    @property
    def is_open(self) -> bool:
        return self.topology == Topology.OPEN

    def describe(self) -> str:
        if not self.is_open:
            return f"periodic N={self.sites}"
        return (
            f"open N={self.sites} alpha={self.alpha} beta={self.beta} xi={self.xi}"
        )


class SpectralFamily(BaseModel):
    """Eigenvalue functions T_0..T_kmax of one (possibly degenerate) eigenstate."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    label: str = Field(..., description="Eigenstate label, unique within a spectrum.")
    topology: Topology = Field(..., description="Which Hirota right-hand side applies.")
    T: Tuple[SpectralFunction, ...] = Field(
        ..., description="T_0..T_kmax; T_0 is 1 (open) or phi^- (periodic)."
    )
    phi: SpectralFunction
    phibar: SpectralFunction
    delta: SpectralFunction
    qdet: Tuple[SpectralFunction, ...] = Field(
        ..., description="Quantum determinants T_{2,0}..T_{2,kmax}."
    )
    energy: Optional[float] = Field(
        default=None, description="Eigenvalue of the Hamiltonian, when known."
    )
    degeneracy: int = Field(
        default=1, ge=1, description="Number of eigenvectors sharing these T_k."
    )
    provenance: Dict[str, Any] = Field(default_factory=dict)

    @property
    def kmax(self) -> int:
        return len(self.T) - 1

    @property
    def field(self):
        return self.phi.field

    def T_at(self, k: int) -> SpectralFunction:
        """T_k with the convention T_{-1} = 0."""
        if k == -1:
            return SpectralFunction.constant(0, self.field)
        if 0 <= k <= self.kmax:
            return self.T[k]
        raise MissingEntryError(
            f"family {self.label} has T_0..T_{self.kmax}, T_{k} was requested"
        )

    def qdet_at(self, k: int) -> SpectralFunction:
        if 0 <= k < len(self.qdet):
            return self.qdet[k]
        raise MissingEntryError(
            f"family {self.label} has T_2,0..T_2,{len(self.qdet) - 1}, T_2,{k} was requested"
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "energy": self.energy,
            "degeneracy": self.degeneracy,
            "T": [t.to_json() for t in self.T],
        }
