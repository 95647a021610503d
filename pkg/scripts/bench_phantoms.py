"""Run the 50-seed phantom corpus at all three corruption levels and print a
summary table.  Equivalent to three `polarsnake bench` invocations."""
import json
import sys
import tempfile
from pathlib import Path

from polarsnake.cli import main as cli_main


def main() -> None:
    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        for level in (0, 1, 2):
            report_path = Path(tmp) / f"report_{level}.json"
            code = cli_main(["bench", "--seeds", "50", "--corruption", str(level),
                             "--report", str(report_path)])
            if code != 0:
                sys.exit(code)
            agg = json.loads(report_path.read_text())["aggregate"]
            rows.append((level, agg))

    print(f"\n{'level':>5}  {'dice thresh':>12}  {'dice smooth':>12}  "
          f"{'mean ms':>8}  {'converged':>9}")
    for level, agg in rows:
        print(f"{level:5d}  {agg['dice_before_mean']:12.4f}  {agg['dice_after_mean']:12.4f}  "
              f"{agg['time_ms_mean']:8.1f}  {agg['converged_count']:9d}")


if __name__ == "__main__":
    main()
