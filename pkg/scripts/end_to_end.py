"""synth -> train -> eval through the CLI with the shipped configs.

    python3 scripts/end_to_end.py --work /tmp/drls_run [--epochs 30] [--seed 0]

Prints the mean metrics and the wall time of each stage; exits nonzero if
any stage fails.
"""

from __future__ import annotations

import argparse
import subprocess
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def run_pipeline(work, epochs=30, seed=0, count=250, workers=1, synth_config=None, train_config=None):
    """Run the three stages; returns ``(report_path, {stage: seconds})``."""
    work = Path(work)
    work.mkdir(parents=True, exist_ok=True)
    synth_config = synth_config or CONFIGS / "synth_blobs.json"
    train_config = train_config or CONFIGS / "train_default.json"
    data, model, report = work / "data", work / "model", work / "report.csv"
    stages = {
        "synth": ["synth", "--spec", synth_config, "--out", data, "--count", count],
        "train": [
            "train", "--manifest", data / "manifest.jsonl", "--config", train_config,
            "--out-model", model, "--epochs", epochs, "--seed", seed,
        ],
        "eval": [
            "eval", "--model", model, "--manifest", data / "manifest.jsonl",
            "--report", report, "--workers", workers,
        ],
    }
    timings = {}
    for name, args in stages.items():
        t0 = time.perf_counter()
        cmd = [sys.executable, "-m", "drlseg.harness.cli", *map(str, args)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        timings[name] = time.perf_counter() - t0
        if proc.returncode != 0:
            raise RuntimeError(f"{name} failed ({proc.returncode}): {proc.stderr.strip()}")
    return report, timings


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--work", required=True)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=250)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    from drlseg.metrics import read_report

    report, timings = run_pipeline(args.work, args.epochs, args.seed, args.count, args.workers)
    mean = read_report(report)["MEAN"]
    for name, secs in timings.items():
        print(f"{name:6s} {secs:8.1f} s")
    print(f"total  {sum(timings.values()):8.1f} s")
    print("mean " + "  ".join(f"{k}={v:.4f}" for k, v in mean.items() if v is not None))


if __name__ == "__main__":
    main()
