"""Per-family wall clock on the bundled examples (best of N runs, summed).

    python3 scripts/timing_trend.py [--repetitions 9] [--trials 1]

With several trials it also reports how often ST <= SBFL < MBFL held.
"""

from __future__ import annotations

import argparse
import math
import tempfile
from pathlib import Path

from locus.pipeline import RunConfig, run

ROOT = Path(__file__).resolve().parents[1]
ORDER = ("st", "sbfl", "mbfl")


def family_seconds(corpus: Path, repetitions: int) -> dict[str, float]:
    totals = dict.fromkeys(ORDER, 0.0)
    with tempfile.TemporaryDirectory() as d:
        for example in ("equilateral", "isosceles"):
            for family in ORDER:
                best = math.inf
                for _ in range(repetitions):
                    best = min(best, run(RunConfig(corpus / example, family=family, output=Path(d) / "run")).seconds)
                totals[family] += best
    return totals


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", type=Path, default=ROOT / "corpus")
    ap.add_argument("--repetitions", type=int, default=9)
    ap.add_argument("--trials", type=int, default=1)
    args = ap.parse_args()

    held = 0
    for trial in range(args.trials):
        s = family_seconds(args.corpus, args.repetitions)
        ok = s["st"] <= s["sbfl"] < s["mbfl"]
        held += ok
        cells = "  ".join(f"{f}={s[f] * 1000:.2f}ms" for f in ORDER)
        print(f"trial {trial}: {cells}  {'ordered' if ok else 'NOT ordered'}")
    print(f"ST <= SBFL < MBFL held in {held}/{args.trials} trials")


if __name__ == "__main__":
    main()
