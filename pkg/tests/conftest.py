import sys
from pathlib import Path

# Tests import sibling oracle helpers directly.
sys.path.insert(0, str(Path(__file__).parent))
