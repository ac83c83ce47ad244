#!/usr/bin/env python3
"""End-to-end demo on synthetic data: generate a drifting layer stack,
build reference masks, cluster, segment fresh and with reused centroids,
and bootstrap the prompts. Everything runs against the deterministic
oracle backend, so the whole flow works without any model file.

Usage: python scripts/run_synth_demo.py [workdir]
"""

import json
import sys
import tempfile
from pathlib import Path

from poroseg.cli import main as cli


def sh(*argv):
    argv = [str(a) for a in argv]
    print(f"\n$ poroseg {' '.join(argv)}")
    code = cli(argv)
    if code != 0:
        sys.exit(f"step failed with exit code {code}")


def main():
    work = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(
        tempfile.mkdtemp(prefix="poroseg_demo_")
    )
    work.mkdir(parents=True, exist_ok=True)
    stack = work / "stack"

    sh("synth", "--out", stack, "--layers", "16", "--side", "256",
       "--pores", "12", "--noise-sigma", "2", "--seed", "7")

    imgs = work / "imgs"
    gts = work / "gts"
    imgs.mkdir(exist_ok=True)
    gts.mkdir(exist_ok=True)
    for p in stack.glob("layer_*.png"):
        (imgs / p.name).write_bytes(p.read_bytes())
    for p in stack.glob("gt_layer_*.png"):
        (gts / p.name.removeprefix("gt_")).write_bytes(p.read_bytes())

    sh("refs", "--input", imgs, "--out", work / "refs", "--floor", "50")
    sh("cluster", "--input", imgs, "--store", work / "store",
       "--k", "3", "--method", "kmeans", "--floor", "50", "--seed", "0")
    sh("segment", "--input", imgs, "--out", work / "seg_fresh",
       "--backend", "oracle", "--oracle-gt", gts, "--refs", gts,
       "--floor", "50", "--seed", "0")
    sh("segment", "--input", imgs, "--out", work / "seg_reuse",
       "--store", work / "store",
       "--backend", "oracle", "--oracle-gt", gts, "--refs", gts,
       "--floor", "50", "--seed", "0")
    sh("bootstrap", "--input", imgs, "--out", work / "boot",
       "--backend", "oracle", "--oracle-gt", gts, "--refs", gts,
       "--floor", "50", "--k", "3", "--prompt-size", "1000",
       "--bootstrap-iters", "100", "--seed", "0",
       "--oracle-scores", "0.5", "0.95", "0.99")
    sh("eval", "--pred", work / "seg_fresh", "--refs", gts,
       "--out", work / "eval")

    agg = json.loads((work / "boot" / "report.json").read_text())["aggregate"]
    print(f"\nbootstrap aggregate: mean DSC {agg['mean_dsc']:.4f} "
          f"+/- {agg['std_dsc']:.4f}, mean CI length "
          f"{agg['mean_ci_length']:.5f} +/- {agg['std_ci_length']:.5f}")
    print(f"artifacts under {work}")


if __name__ == "__main__":
    main()
