"""
Driving the simulator from the shell
====================================

The same pipeline is exposed as ``eraser-sim`` with four subcommands.
Here it is called in-process through ``main`` so the script stays
self-contained; from a shell use ``eraser-sim run --config FILE``.
"""

import io
import json
from pathlib import Path

from eraser_sim.cli import main

here = Path(__file__).parent / "scenarios"

buf = io.StringIO()
code = main(["run", "--config", str(here / "conditional.txt")], stdout=buf)
report = json.loads(buf.getvalue())
print("run exit", code, "V_QE_cond", report["simulated"]["V_QE_cond"], "MC", report["mc"]["estimate"])

buf = io.StringIO()
code = main(["sweep", "--config", str(here / "tbs_sweep.txt")], stdout=buf)
lines = buf.getvalue().splitlines()
print("sweep exit", code, "rows", len(lines) - 1)
print(lines[0][:80], "...")

# Degenerate scenarios still produce a report, flagged with exit code 2.
code = main(["run", "--config", str(here / "degenerate.txt")], stdout=io.StringIO())
print("degenerate exit", code)

buf = io.StringIO()
code = main(["verify", "--only", "conditional-complementarity"], stdout=buf)
print(buf.getvalue().strip())
print("verify exit", code)
