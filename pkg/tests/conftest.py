import sys
from pathlib import Path

# test-support modules (oracles, builders) live next to the tests
sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"
