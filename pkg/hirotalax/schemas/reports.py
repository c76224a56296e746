from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from hirotalax.core.config import settings
from hirotalax.core.constants import REPORT_SCHEMA_VERSION
from hirotalax.schemas.chain import ChainSpec, Topology


class Suite(str, Enum):
    CHAIN = "chain"
    HIROTA = "hirota"
    LAX = "lax"
    TQ = "tq"
    HIROTA_LIKE = "hirota-like"
    PLUCKER = "plucker"
    IDENTITIES = "identities"
    ALL = "all"

    @classmethod
    def expand(cls, suite: "Suite") -> List["Suite"]:
        if suite == cls.ALL:
            return [
                cls.CHAIN,
                cls.IDENTITIES,
                cls.PLUCKER,
                cls.HIROTA,
                cls.HIROTA_LIKE,
                cls.LAX,
                cls.TQ,
            ]
        return [suite]


class Model(str, Enum):
    EXACT = "exact"
    FLOAT = "float"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"
    TEXT = "text"


class Command(str, Enum):
    SPECTRUM = "spectrum"
    VERIFY = "verify"
    SOLVE_Q = "solve-q"


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, use_enum_values=False)

    command: Command = Field(..., description="Subcommand that produced the report.")
    suite: Optional[Suite] = Field(
        None, description="Verification suite; only set for the verify subcommand."
    )
    sites: int = Field(..., ge=1, description="Number of spin-1/2 sites N.")
    topology: Topology = Field(Topology.PERIODIC, description="Boundary conditions.")
    alpha: float = Field(1.0, description="Right boundary parameter (open chains).")
    beta: float = Field(1.0, description="Left boundary parameter (open chains).")
    xi: float = Field(0.0, description="Off-diagonal left boundary parameter (open chains).")
    kmax: int = Field(
        default_factory=lambda: settings.DEFAULT_KMAX,
        ge=0,
        description="Highest fusion level k checked.",
    )
    model: Model = Field(
        default_factory=lambda: Model(settings.DEFAULT_MODEL),
        description="Coefficient model for identity-type checks.",
    )
    tolerance: float = Field(
        default_factory=lambda: settings.CHECK_TOLERANCE,
        gt=0,
        description="Pass threshold for relative residual magnitudes.",
    )
    seed: int = Field(
        default_factory=lambda: settings.DEFAULT_SEED,
        description="Seed for every randomized sample in the run.",
    )
    samples: int = Field(
        default_factory=lambda: settings.DEFAULT_SAMPLES,
        ge=1,
        le=10_000,
        description="Number of sample points per float residual.",
    )
    out: Optional[str] = Field(None, description="Output path; stdout when unset.")
    format: OutputFormat = Field(OutputFormat.JSON, description="Report format.")
    delta_scale: float = Field(
        1.0,
        description="Factor applied to Delta in the tq suite; anything but 1 is a negative control.",
    )
    tables: bool = Field(
        False, description="Attach (u, |residual|) sample tables to float records."
    )

    @model_validator(mode="after")
    def check_chain(self):
        # raises the ChainSpec validation errors (alpha, beta nonzero) early
        self.chain()
        return self

    def chain(self) -> ChainSpec:
        return ChainSpec(
            sites=self.sites,
            topology=self.topology,
            alpha=self.alpha,
            beta=self.beta,
            xi=self.xi,
        )


class CheckRecord(BaseModel):
    check: str = Field(..., description="Name of the relation or property checked.")
    k: Optional[int] = Field(None, description="Fusion level, when the check has one.")
    a: Optional[int] = Field(None, description="Second index of H_{k,a} or Plücker checks.")
    state: Optional[str] = Field(None, description="Eigenstate label, when state-specific.")
    magnitude: Optional[float] = Field(
        None, description="Residual magnitude; 0.0 for an exact zero, null when not computed."
    )
    passed: bool = Field(..., description="Whether the check is within tolerance.")
    anchor: str = Field(..., description="The relation checked, written out.")
    detail: Optional[str] = Field(None, description="Error message or extra context.")
    table: Optional[List[Dict[str, Any]]] = Field(
        None, description="(u, |residual|) samples, when requested."
    )

    def sort_key(self):
        return (
            self.passed,
            self.check,
            self.k if self.k is not None else -1,
            self.a if self.a is not None else -1,
            self.state or "",
        )


class Summary(BaseModel):
    total: int = 0
    passed: int = 0
    failed: int = 0


class StateRecord(BaseModel):
    """Per-eigenstate payload of the spectrum and solve-q subcommands."""

    label: str
    energy: Optional[float] = None
    degeneracy: int = 1
    T: Optional[List[Dict[str, Any]]] = None
    Q: Optional[Dict[str, Any]] = None
    normalization: Optional[Dict[str, Any]] = None


class Report(BaseModel):
    model_config = ConfigDict(populate_by_name=True, serialize_by_alias=True)

    schema_version: int = Field(REPORT_SCHEMA_VERSION, alias="schema")
    config: RunConfig
    records: List[CheckRecord] = Field(default_factory=list)
    states: List[StateRecord] = Field(default_factory=list)
    summary: Summary = Field(default_factory=Summary)
    wall_time: Optional[float] = Field(
        None, description="Seconds spent; left out of JSON unless REPORT_TIMING is set."
    )

    @classmethod
    def assemble(
        cls,
        config: RunConfig,
        records: List[CheckRecord],
        states: Optional[List[StateRecord]] = None,
        wall_time: Optional[float] = None,
    ) -> "Report":
        ordered = sorted(records, key=CheckRecord.sort_key)
        passed = sum(r.passed for r in ordered)
        return cls(
            config=config,
            records=ordered,
            states=states or [],
            summary=Summary(total=len(ordered), passed=passed, failed=len(ordered) - passed),
            wall_time=wall_time,
        )

    @property
    def ok(self) -> bool:
        return self.summary.failed == 0

    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def to_json(self) -> str:
        exclude = None if settings.REPORT_TIMING else {"wall_time"}
        return self.model_dump_json(indent=2, by_alias=True, exclude=exclude)
