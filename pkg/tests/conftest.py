import sys
from pathlib import Path

# make the oracle helpers in tests/ importable regardless of invocation dir
sys.path.insert(0, str(Path(__file__).resolve().parent))

DATA_DIR = Path(__file__).resolve().parent / "data"
