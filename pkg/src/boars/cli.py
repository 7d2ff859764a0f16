"""Batch command-line entry point and service launcher."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

from .engine import (
    AcquisitionSpec,
    BOConfig,
    evaluate_run,
    ground_truth_map,
    random_baseline,
    run_boars,
)
from .errors import BoarsError
from .grid import SimulatedInstrument, SyntheticConfig, generate_synthetic_grid, load_dataset
from .records import export_run
from .surrogate import TrainConfig
from .voters import ReplayVoter, ThresholdVoter

log = logging.getLogger("boars")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boars", description="Run the BOARS workflow")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--dataset", metavar="PATH", help="pre-acquired grid file")
    src.add_argument("--synthetic", action="store_true", help="use the synthetic generator")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho", type=float, default=0.2,
                   help="image/spectra correlation of the synthetic grid")
    p.add_argument("--window", type=int, default=4)
    p.add_argument("--init", type=int, default=10)
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--kernel", choices=["rbf", "periodic", "deep"], default="rbf")
    p.add_argument("--acquisition", choices=["ei", "pi", "ucb"], default="ei")
    p.add_argument("--xi", type=float, default=0.01)
    p.add_argument("--kappa", type=float, default=2.0)
    p.add_argument("--reward", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=200, help="Adam steps for the first fit")
    p.add_argument("--refit-steps", type=int, default=None,
                   help="Adam steps per warm-started refit (default: same as --steps)")
    p.add_argument("--voter", default="threshold",
                   help="threshold | replay:PATH (JSON vote script)")
    p.add_argument("--baseline", action="store_true",
                   help="also run the equal-budget random baseline")
    p.add_argument("--out", metavar="DIR", help="export the run record here")
    p.add_argument("--serve", action="store_true", help="start the HTTP service instead")
    p.add_argument("--port", type=int, default=8000)
    return p


def _build_voter(spec: str):
    if spec == "threshold":
        return ThresholdVoter()
    if spec.startswith("replay:"):
        return ReplayVoter.from_file(spec.split(":", 1)[1])
    raise ValueError(f"unknown voter {spec!r}")


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("BOARS_LOG", "WARNING").upper())
    args = build_parser().parse_args(argv)

    if args.serve:
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host="127.0.0.1", port=args.port)
        return 0

    try:
        if args.dataset:
            grid = load_dataset(args.dataset)
        else:
            grid = generate_synthetic_grid(SyntheticConfig(rho=args.rho), seed=args.seed)
        config = BOConfig(
            window=args.window,
            init_samples=args.init,
            iterations=args.iterations,
            kernel=args.kernel,
            acquisition=AcquisitionSpec(kind=args.acquisition, xi=args.xi, kappa=args.kappa),
            reward=args.reward,
            train=TrainConfig(steps=args.steps, seed=args.seed),
            refit_steps=args.refit_steps,
            seed=args.seed,
        )
        config.validate_against(grid)
        voter = _build_voter(args.voter)
    except (BoarsError, ValueError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1

    try:
        t0 = time.perf_counter()
        record = run_boars(config, SimulatedInstrument(grid), voter)
        truth = ground_truth_map(grid, record.final_target, config.window, config.ssim)
        evaluate_run(record, truth)
        runtime = time.perf_counter() - t0
        record.timings["run_seconds"] = runtime
        if args.out:
            export_run(record, args.out)
        line = (f"mse={record.mse:.6f} runtime={runtime:.1f}s "
                f"explored={len(record.explored)}")
        if args.baseline:
            base = random_baseline(config, SimulatedInstrument(grid), record.final_target)
            evaluate_run(base, truth)
            if args.out:
                export_run(base, os.path.join(args.out, "baseline"))
            line += f" baseline_mse={base.mse:.6f}"
        print(line)
        return 0
    except BoarsError as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
