"""The same workflow driven through the command-line interface.

fit -> adjust -> report, all on files in a temporary directory.  The CLI
is also installed as the `svyadjust` console script; here it is invoked
in-process so the demo runs without installation.
"""

import tempfile
from pathlib import Path

import numpy as np

from svyadjust import SurveySample, write_microdata
from svyadjust.cli import main

workdir = Path(tempfile.mkdtemp(prefix="svyadjust_demo_"))
print("working in", workdir)

# clustered microdata, same setup as demo 01
rng = np.random.default_rng(4)
x1 = rng.standard_normal(40)
yc = (rng.uniform(size=40) < 1 / (1 + np.exp(-x1))).astype(float)
rep = np.repeat(np.arange(40), 5)
sample = SurveySample(y=yc[rep],
                      X=np.column_stack([np.ones(200), x1[rep]]),
                      weight=np.ones(200),
                      stratum_id=np.zeros(200, dtype=int), psu_id=rep)
data = workdir / "microdata.csv"
write_microdata(data, sample)

print("\n$ svyadjust fit ...")
main(["fit", "--data", str(data), "--outcome", "y", "--covariates", "x1",
      "--weight", "weight", "--seed", "7",
      "--out", str(workdir / "draws.csv"),
      "--draws", "1000", "--warmup", "500", "--chains", "2"])

print("\n$ svyadjust adjust ...")
main(["adjust", "--draws-file", str(workdir / "draws.csv"),
      "--data", str(data), "--outcome", "y", "--covariates", "x1",
      "--weight", "weight", "--stratum", "stratum", "--psu", "psu",
      "--seed", "7", "--replicates", "200",
      "--out", str(workdir / "adjusted.csv")])

print("\n$ svyadjust report ...  (90% ellipse boundaries for plotting)")
main(["report", "--draws-file", str(workdir / "draws.csv"),
      "--adjusted-draws-file", str(workdir / "adjusted.csv"),
      "--out", str(workdir / "ellipses.csv"), "--seed", "7"])

lines = (workdir / "ellipses.csv").read_text().splitlines()
print(f"wrote {len(lines) - 1} ellipse points to {workdir / 'ellipses.csv'}")
print("outputs:", sorted(p.name for p in workdir.iterdir()))
