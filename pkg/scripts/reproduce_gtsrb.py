"""Train and evaluate with the default configuration, then summarize the run.

    python3 scripts/reproduce_gtsrb.py GTSRB/Final_Training/Images runs/full
    python3 scripts/reproduce_gtsrb.py --subset GTSRB/Final_Training/Images runs/subset

Expect hours on a CPU for the full 39,209-image set.
"""
import argparse
import json
import subprocess
import sys
import tempfile
import time
from pathlib import Path

from tsrnet.gtsrb import make_subset


def run(*args: str) -> str:
    proc = subprocess.run([sys.executable, "-m", "tsrnet.cli", *args], stdout=subprocess.PIPE, text=True)
    if proc.returncode:
        sys.exit(proc.returncode)
    return proc.stdout


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("data_root")
    parser.add_argument("out_dir")
    parser.add_argument("--subset", action="store_true", help="use the 10-class, 9,000-image subset")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        root = args.data_root
        if args.subset:
            root = str(Path(tmp) / "subset")
            make_subset(args.data_root, root, seed=args.seed)
        start = time.perf_counter()
        common = ["--data-root", root, "--out-dir", args.out_dir, "--seed", str(args.seed)]
        run("train", *common)
        line = run("eval", *common).strip().splitlines()[-1]
        elapsed = time.perf_counter() - start

    manifest = json.loads((Path(args.out_dir) / "manifest.json").read_text())
    summary = {
        "test_accuracy": float(line.split("=")[1]),
        "epochs_run": manifest["epochs_run"],
        "best_epoch": manifest["best_epoch"],
        "split_sizes": manifest["split_sizes"],
        "minutes": round(elapsed / 60, 1),
    }
    print(json.dumps(summary, indent=2))
    (Path(args.out_dir) / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


if __name__ == "__main__":
    main()
