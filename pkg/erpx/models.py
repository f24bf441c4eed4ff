"""
Run ledger table definitions.

SQLModel classes with `table=True` map to tables of the optional run ledger;
`FormationRun` holds one trace row per formed ensemble, with enough metadata
(seed, config hash, tool version) to regenerate it.
"""
from datetime import datetime, timezone
from typing import Optional

from sqlalchemy import text
from sqlmodel import Field, SQLModel

from . import __version__
from .schemas import TraceRow

# ==========================================
# FORMATION RUN TABLE
# ==========================================

class FormationRun(SQLModel, table=True):
    """One ERPX run: stage counts D, d, s, e, h and the reported MSEs."""
    __tablename__ = "formation_runs"

    id: Optional[int] = Field(default=None, primary_key=True)
    created_at: datetime = Field(
        default_factory=lambda: datetime.now(timezone.utc),
        sa_column_kwargs={"server_default": text("CURRENT_TIMESTAMP")},
    )

    # index: runs are looked up per dataset when tables are rebuilt
    dataset: str = Field(nullable=False, index=True)
    base: str = Field(nullable=False)
    run: int = Field(nullable=False)

    # SQLite column names are case-insensitive, so D and d get spelled out
    n_features: int
    n_initial: int
    n_screened: int
    n_candidates: int
    n_final: int

    erpx_mse: float
    base_mse: Optional[float] = None
    erpx_test_mse: Optional[float] = None
    base_test_mse: Optional[float] = None

    seed: str = Field(nullable=False)
    config_hash: str = Field(nullable=False, index=True)
    tool_version: str = Field(default=__version__, nullable=False)

    @classmethod
    def from_trace(cls, row: TraceRow, *, seed: int, config_hash: str) -> "FormationRun":
        # seeds reach 2**64 - 1, past SQLite's signed 64-bit integers
        fields = row.model_dump(mode="json", exclude={"D", "d", "s", "e", "h"})
        return cls(
            **fields,
            n_features=row.D, n_initial=row.d, n_screened=row.s, n_candidates=row.e, n_final=row.h,
            seed=str(seed), config_hash=config_hash,
        )
