#!/usr/bin/env python3
"""Regenerates data/fixtures. Usage: make_fixtures.py path/to/dirichlet-reg"""
import json
import random
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "data" / "fixtures"


def grid_time(i, steps, horizon=1.0):
    return horizon if i == steps else horizon * i / steps


def write_path(name, steps, values, jumps):
    with open(FIX / name, "w", newline="\n") as f:
        f.write("t,value,jump\n")
        for i in range(steps + 1):
            f.write(f"{grid_time(i, steps)!r},{values[i]!r},{jumps[i]!r}\n")


def heaviside(steps=1000, at=500):
    values = [0.0 if i < at else 1.0 for i in range(steps + 1)]
    jumps = [1.0 if i == at else 0.0 for i in range(steps + 1)]
    write_path("heaviside.csv", steps, values, jumps)


def white_noise(steps=1000, seed=20240601):
    # iid values: [X,X]^eps grows like 1/eps, so no schedule converges
    r = random.Random(seed)
    values = [0.0] + [r.gauss(0.0, 1.0) for _ in range(steps)]
    write_path("white_noise.csv", steps, values, [0.0] * (steps + 1))


def run(binary, command, config, out):
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as f:
        json.dump(config, f)
    subprocess.run([binary, command, "--config", f.name, "--out", str(out)], check=True)
    Path(f.name).unlink()


def bm(binary, tmp):
    run(binary, "simulate",
        {"model": {"type": "brownian"}, "grid": {"horizon": 1, "steps": 10000}, "seed": 7, "paths": 1},
        tmp / "bm")
    shutil.copy(tmp / "bm" / "paths" / "path_000000.csv", FIX / "bm_path.csv")


def psi(binary, tmp):
    triplet = {"b": 0.5, "c": 1.0, "truncation": "standard",
               "gaussian_densities": [{"weight": 2.0, "mean": 0.0, "sd": 0.25}]}
    run(binary, "exponent", {"exponent": {"triplet": triplet, "u_max": 40, "points": 2048}}, tmp / "psi")
    shutil.copy(tmp / "psi" / "psi.csv", FIX / "psi_gaussian_cp.csv")
    with open(FIX / "psi_gaussian_cp.expected.json", "w") as f:
        json.dump({"triplet": triplet, "b": 0.5, "c": 1.0, "relative_tolerance": 0.05,
                   "lambda_l1_window": [0.05, 1.5], "lambda_l1_tolerance": 0.05}, f, indent=2)
        f.write("\n")


def main():
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    FIX.mkdir(parents=True, exist_ok=True)
    heaviside()
    white_noise()
    with tempfile.TemporaryDirectory() as d:
        bm(sys.argv[1], Path(d))
        psi(sys.argv[1], Path(d))


if __name__ == "__main__":
    main()
