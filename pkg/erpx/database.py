"""
Run ledger connection and session management.

The ledger is optional: when `ledger_url` is set (for example
`sqlite:///runs.db`), `form` and `benchmark` append their trace rows to the
`formation_runs` table. Tables are created on first use.
"""
from collections.abc import Iterable, Iterator
from contextlib import contextmanager

from sqlalchemy.engine import Engine
from sqlmodel import Session, SQLModel, create_engine, select

from .exceptions import ConfigError
from .models import FormationRun

_engines: dict[str, Engine] = {}


def get_engine(url: str) -> Engine:
    """One engine per URL; the first call creates the ledger tables."""
    if url not in _engines:
        try:
            engine = create_engine(url)
        except Exception as exc:  # sqlalchemy raises ArgumentError and friends for malformed URLs
            raise ConfigError(f"invalid ledger URL '{url}': {exc}") from exc
        SQLModel.metadata.create_all(engine)
        _engines[url] = engine
    return _engines[url]


@contextmanager
def get_session(engine: Engine) -> Iterator[Session]:
    """A session that is closed when the block exits, even on error."""
    with Session(engine) as session:
        yield session


def append_runs(engine: Engine, runs: Iterable[FormationRun]) -> int:
    """Inserts the runs in one transaction and returns how many were written."""
    runs = list(runs)
    with get_session(engine) as session:
        session.add_all(runs)
        session.commit()
    return len(runs)


def runs_for(engine: Engine, dataset: str) -> list[FormationRun]:
    with get_session(engine) as session:
        statement = select(FormationRun).where(FormationRun.dataset == dataset).order_by(FormationRun.id)
        return list(session.exec(statement).all())
