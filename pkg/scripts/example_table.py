"""Run every technique on the bundled examples and print top-rank lines and times.

    python3 scripts/example_table.py [--corpus corpus] [--output runs]
"""

from __future__ import annotations

import argparse
import tempfile
from pathlib import Path

from locus.pipeline import RunConfig, run
from locus.scoring import FAMILIES

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", type=Path, default=ROOT / "corpus")
    ap.add_argument("--output", type=Path, default=None, help="keep run stores here (default: temporary)")
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        out = args.output or Path(tmp)
        for example in ("equilateral", "isosceles"):
            print(f"== {example}")
            for family, techniques in FAMILIES.items():
                report = run(RunConfig(args.corpus / example, family=family, output=out / example / family))
                for t in techniques:
                    lines = sorted(report.rankings[t].top_lines())
                    shown = ", ".join(map(str, lines)) if lines else "-"
                    print(f"  {family:5} {t:11} {report.seconds:8.4f}s  top: {shown}")


if __name__ == "__main__":
    main()
