"""Drive the experiment runner from Python and from a config file.

A run compares a measured growth exponent against the topological bound
for the named manifold and returns one summary row with a PASS/FAIL
verdict.  The same experiments can live in an INI file, one section per
experiment, handed to the command line tool:

    slowvol run experiments.ini --out results/

Exit code 0 means every section passed.
"""

import configparser
import subprocess
import sys
import tempfile
from pathlib import Path

from slowvol.cli_report import ExperimentConfig, run


def main():
    config = ExperimentConfig(
        name="heisenberg_balls",
        kind="group_growth",
        group="heisenberg",
        descriptor="Nil(1)",
        m_max=14,
        tolerance=0.5,
    )
    row = run(config)
    print(f"api run:  {row.line()}")

    ini = configparser.ConfigParser()
    ini["torus_flow"] = {
        "kind": "flow_growth",
        "model": "FlatTorus(2)",
        "descriptor": "T(2)",
        "times": "geom:1:32:11",
        "integrator": "exact",
        "resolution": "32",
        "refine_threshold": "1e9",
    }
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "experiments.ini"
        with open(path, "w") as fh:
            ini.write(fh)
        proc = subprocess.run(
            [sys.executable, "-m", "slowvol", "run", str(path), "--out", tmp],
            capture_output=True, text=True,
        )
        print(f"cli run:  exit {proc.returncode}")
        print((Path(tmp) / "summary.txt").read_text().rstrip())


if __name__ == "__main__":
    main()
