from __future__ import annotations

import sys
from pathlib import Path

ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

try:
    import mpmath  # noqa: F401
except ImportError as exc:
    raise SystemExit(
        "Missing dependency: mpmath. Install project dependencies with "
        "`pip install -r requirements.txt` before running this script."
    ) from exc

from app.cli import main

# Example, from the repository root:
# python scripts/coeffzero.py track --potential quartic --beta 1 --orders 40,80,160 --emin 1 --emax 2
if __name__ == "__main__":
    raise SystemExit(main())
