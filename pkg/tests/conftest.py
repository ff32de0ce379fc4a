import sys
from pathlib import Path

# allow `from helpers import ...` inside test modules
sys.path.insert(0, str(Path(__file__).parent))
