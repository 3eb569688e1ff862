from sqlalchemy import Column, Integer, String, Text, DateTime, Float, ForeignKey
from sqlalchemy.orm import declarative_base, relationship, sessionmaker
from sqlalchemy import create_engine
from datetime import datetime
import json

Base = declarative_base()

class BenchmarkRun(Base):
    __tablename__ = "benchmark_runs"

    id = Column(Integer, primary_key=True, index=True)
    dataset = Column(String, index=True)
    model = Column(String, index=True)  # mc or em
    variant = Column(String)  # objective kind or EM structure
    root_seed = Column(Integer)
    split_count = Column(Integer)
    failures = Column(Integer, default=0)
    rmse_mean = Column(Float, nullable=True)
    rmse_se = Column(Float, nullable=True)
    log_likelihood_mean = Column(Float, nullable=True)
    log_likelihood_se = Column(Float, nullable=True)
    config_echo = Column(Text)  # JSON string of the full run configuration
    created_at = Column(DateTime, default=datetime.utcnow)

    splits = relationship("SplitRecord", back_populates="run", cascade="all, delete-orphan")

    def config(self) -> dict:
        return json.loads(self.config_echo or "{}")

class SplitRecord(Base):
    __tablename__ = "split_records"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("benchmark_runs.id"), index=True)
    split_index = Column(Integer)
    status = Column(String)  # ok or failed
    rmse = Column(Float, nullable=True)
    log_likelihood = Column(Float, nullable=True)
    noise_std = Column(Float, nullable=True)
    epochs = Column(Integer)
    error = Column(Text, nullable=True)

    run = relationship("BenchmarkRun", back_populates="splits")

def create_database(database_url: str):
    engine = create_engine(database_url)
    Base.metadata.create_all(bind=engine)
    return engine

def get_session_maker(engine):
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)
