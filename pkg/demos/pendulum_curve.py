"""Train Pendulum through the command line and draw the learning curve.

Writes a config, runs ``pacer train`` for two seeds, evaluates the final
checkpoint and renders an SVG of eval return against step.

    python demos/pendulum_curve.py --steps 20000 --out runs/pendulum
"""

import argparse
import json
from pathlib import Path

from pacer.cli import main
from pacer.presets import COMMON, PRESETS

parser = argparse.ArgumentParser()
parser.add_argument("--steps", type=int, default=20_000)
parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1])
parser.add_argument("--out", default="runs/pendulum")
args = parser.parse_args()

out = Path(args.out)
out.mkdir(parents=True, exist_ok=True)
config = {"env": "Pendulum", "seeds": args.seeds, "out_dir": str(out)}
config.update({k: list(v) if isinstance(v, tuple) else v for k, v in COMMON.items() if v is not None})
config.update(PRESETS["Pendulum"])
config["total_steps"] = args.steps
config["mmd.n_samples"] = config.pop("n_mmd")
config["mmd.batch"] = config.pop("mmd_batch")
(out / "pendulum.json").write_text(json.dumps(config, indent=2))

main(["train", str(out / "pendulum.json")])
for s in args.seeds:
    main(["eval", str(out / f"seed{s}"), "--episodes", "10"])

csvs = [str(out / f"seed{s}" / f"metrics_seed{s}.csv") for s in args.seeds]
main(["plot", *csvs, "-o", str(out / "curve.svg"), "--window", "3"])
