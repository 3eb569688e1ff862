import os
from pathlib import Path
from dotenv import load_dotenv

# Only load .env file if it exists (for local development)
if os.path.exists('.env'):
    load_dotenv()

class Config:
    # Directory that holds the UCI CSV files; relative dataset paths resolve here
    DATA_DIR = Path(os.getenv("SHRINKAGE_DATA_DIR", "./data"))

    # Defaults shared by the CLI and the run-file loader
    DEFAULT_ROOT_SEED = 0
    DEFAULT_SPLITS = 20
    DEFAULT_TEST_FRACTION = 0.1

    def resolve_data_path(self, path: str) -> Path:
        """Resolve a dataset path from a run file against DATA_DIR."""
        candidate = Path(path)
        if candidate.is_absolute() or candidate.exists():
            return candidate
        return self.DATA_DIR / candidate

config = Config()
