import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parents[2]
FIXTURES = ROOT / "tests" / "fixtures"

# In-tree runs import the package from python/, where the build drops _dimo.
sys.path.insert(0, str(ROOT / "python"))
