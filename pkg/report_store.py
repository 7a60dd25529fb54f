import json
import logging
from contextlib import contextmanager
from datetime import datetime
from typing import Any, Dict, List, Optional

from sqlalchemy import Boolean, Column, DateTime, Integer, String, Text, create_engine
from sqlalchemy.orm import Session, declarative_base, scoped_session, sessionmaker
from sqlalchemy.sql import func

from reports import RunReport
from settings import get_settings

logger = logging.getLogger("report_store")

Base = declarative_base()


class RunReportModel(Base):
    """One recorded CLI run"""
    __tablename__ = "run_reports"

    id = Column(Integer, primary_key=True)
    command = Column(String(255), nullable=False, index=True)
    passed = Column(Boolean, nullable=False)
    checks = Column(Integer, default=0)
    payload = Column(Text, nullable=False)
    created_at = Column(DateTime, server_default=func.now())

    def __repr__(self):
        return f"<RunReport id={self.id} command={self.command!r} passed={self.passed}>"


class ReportStore:
    """Connection and session manager for the run history"""

    def __init__(self, url: Optional[str] = None):
        self.url = url or get_settings().report_db_url
        self.engine = None
        self.session_factory = None
        self.session = None
        self._connect()

    def _connect(self):
        try:
            self.engine = create_engine(self.url, echo=False)
            self.session_factory = sessionmaker(bind=self.engine)
            self.session = scoped_session(self.session_factory)
            logger.info(f"Connected to report store {self.url}")
        except Exception as e:
            logger.error(f"Error connecting to report store: {str(e)}")
            raise

    def initialize_database(self):
        try:
            Base.metadata.create_all(self.engine)
        except Exception as e:
            logger.error(f"Error creating report tables: {str(e)}")
            raise

    @contextmanager
    def get_session(self) -> Session:
        session = self.session()
        try:
            yield session
            session.commit()
        except Exception as e:
            session.rollback()
            logger.error(f"Report store session error: {str(e)}")
            raise
        finally:
            session.close()

    def close(self):
        if self.session:
            self.session.remove()
        if self.engine:
            self.engine.dispose()
        logger.info("Report store closed")


def _summary(row: RunReportModel) -> Dict[str, Any]:
    return {
        "id": row.id,
        "command": row.command,
        "passed": row.passed,
        "checks": row.checks,
        "created_at": row.created_at.isoformat() if row.created_at else None,
    }


class ReportRepository:
    """Run-history operations"""

    def __init__(self, store: ReportStore):
        self.store = store

    def save_report(self, report: RunReport) -> int:
        with self.store.get_session() as session:
            row = RunReportModel(
                command=" ".join(report.command)[:255],
                passed=report.passed,
                checks=len(report.checks),
                payload=report.to_json(),
                created_at=datetime.now(),
            )
            session.add(row)
            session.flush()
            logger.debug(f"Recorded run {row.id}: {row.command}")
            return row.id

    def list_recent(self, limit: int = 20) -> List[Dict[str, Any]]:
        with self.store.get_session() as session:
            rows = session.query(RunReportModel).order_by(RunReportModel.id.desc()).limit(limit).all()
            return [_summary(row) for row in rows]

    def get_report(self, report_id: int) -> Optional[RunReport]:
        with self.store.get_session() as session:
            row = session.get(RunReportModel, report_id)
            if row is None:
                return None
            return RunReport(**json.loads(row.payload))


# Singleton instances
_store = None
_repository = None


def get_report_store() -> ReportStore:
    global _store
    if _store is None:
        _store = ReportStore()
        _store.initialize_database()
    return _store


def get_report_repository() -> ReportRepository:
    global _repository
    if _repository is None:
        _repository = ReportRepository(get_report_store())
    return _repository


def close_report_store():
    global _store, _repository
    if _store:
        _store.close()
    _store = None
    _repository = None
