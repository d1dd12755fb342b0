"""End-to-end figure pipeline: CLI outputs in, rendered figure out.

Runs the shipped benchmark config through `qtraj master` and
`qtraj ensemble`, then hands the CSVs to the plotkit renderer (a separate
node package consuming only the CSV interface).  Produces fig5.svg in the
output directory.
"""

import shutil
import subprocess
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
OUT = REPO / "out" / "fig5_pipeline"
OUT.mkdir(parents=True, exist_ok=True)
CONFIG = REPO / "configs" / "fig5.json"


def run(cmd):
    print("  $", " ".join(str(c) for c in cmd))
    res = subprocess.run([str(c) for c in cmd], capture_output=True, text=True)
    sys.stdout.write("    " + res.stdout.replace("\n", "\n    ").rstrip() + "\n")
    if res.returncode != 0:
        sys.stderr.write(res.stderr)
        sys.exit(res.returncode)


print("1. deterministic curve")
run([sys.executable, "-m", "qtraj.cli", "master", "--config", CONFIG, "--out", OUT])

print("2. 64-trajectory homodyne ensemble (a minute or two)")
run([sys.executable, "-m", "qtraj.cli", "ensemble", "--config", CONFIG, "--out", OUT,
     "--parallelism", "4"])

node = shutil.which("node")
plot_cli = REPO / "plotkit" / "dist" / "plot_fig5.js"
if node is None or not plot_cli.exists():
    print("3. skipped rendering: build plotkit first (npm --prefix plotkit install "
          "&& npm --prefix plotkit run build)")
    sys.exit(0)

print("3. figure")
run([node, plot_cli,
     "--master", OUT / "master.csv",
     "--summary", OUT / "summary.csv",
     "--traj", OUT / "traj_*.csv",
     "--obs", "P_e",
     "--out", OUT / "fig5.svg"])
print(f"done: {OUT / 'fig5.svg'}")
