"""Command-line interface.

Subcommands: phantom, degrade, restore, metrics, bench, sweep, serve.
Exit codes: 0 success, 1 invalid usage or validation failure, 2 runtime
failure.  Restoration parameters are exposed as dotted flags that mirror the
run-config keys one to one (e.g. ``--controller.lambda 0.3``); a flag
overrides the same key from ``--config``.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench as benchmod
from . import metrics as metricsmod
from . import runcfg
from .engine import run
from .errors import ParameterError, ResteerError
from .operators import (
    blur_operator,
    box_kernel,
    degrade,
    frequency_mask_operator,
    gaussian_kernel,
    identity_operator,
    pixel_mask_operator,
)
from .phantoms import MASK_KINDS, PHANTOM_NAMES, make_phantom, make_sampling_mask
from .runio import read_observation, write_observation, write_run_dir
from .tensorio import read_ct2, read_pgm, write_ct2, write_pgm


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors with exit code 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise _UsageError(message)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    for key in runcfg.CONFIG_SCHEMA:
        p.add_argument(f"--{key}", dest=_dest(key), metavar="V", default=None)


def _dest(key: str) -> str:
    return "cfgkey__" + key.replace(".", "__")


def build_parser() -> _Parser:
    parser = _Parser(prog="resteer", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    p = sub.add_parser("phantom", help="generate an analytic test image")
    p.add_argument("--name", required=True, choices=PHANTOM_NAMES)
    p.add_argument("--size", required=True, type=int)
    p.add_argument("--out", required=True, help="output path (.ct2 or .pgm)")

    p = sub.add_parser("degrade", help="apply a forward operator plus noise")
    p.add_argument("--in", dest="input", required=True, help="input image (.ct2 or .pgm)")
    p.add_argument("--out", required=True, help="observation directory to create")
    p.add_argument("--op", required=True,
                   choices=("identity-plus-noise", "pixel-mask", "frequency-mask", "blur"))
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask-kind", choices=MASK_KINDS, default="random-uniform")
    p.add_argument("--keep", type=float, default=0.5, help="mask keep fraction")
    p.add_argument("--mask-seed", type=int, default=0)
    p.add_argument("--kernel-size", type=int, default=5)
    p.add_argument("--kernel-sigma", type=float, default=1.0, help="0 selects a box kernel")

    p = sub.add_parser("restore", help="run the restoration engine")
    p.add_argument("--in", dest="input", required=True, help="observation directory")
    p.add_argument("--out", required=True, help="run directory to create")
    p.add_argument("--config", default=None, help="run-config file (key = value lines)")
    p.add_argument("--mode", choices=sorted(runcfg.PRESETS), default=None,
                   help="preset shorthand for mode_preset")
    _add_config_flags(p)

    p = sub.add_parser("metrics", help="compare two images")
    p.add_argument("--ref", required=True)
    p.add_argument("--cand", required=True)
    p.add_argument("--peak", type=float, default=1.0)
    p.add_argument("--window", type=int, default=7)
    p.add_argument("--format", choices=("plain", "csv"), default="plain")

    p = sub.add_parser("bench", help="run the ablation suite")
    p.add_argument("--suite", choices=("default",), default="default")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--no-run-dirs", action="store_true", help="skip per-run directories")

    p = sub.add_parser("sweep", help="sweep lambda over one case")
    p.add_argument("--case", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--points", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--size", type=int, default=64)

    p = sub.add_parser("serve", help="start the steering service")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data", required=True, help="directory for job run directories")
    p.add_argument("--jobs-max", type=int, default=8)
    p.add_argument("--ui", default=None, help="static UI bundle directory")
    p.add_argument("--pace-millis", type=int, default=0)

    return parser


def flag_table() -> dict[str, set[str]]:
    """Accepted option strings per subcommand (the documented flag table)."""
    parser = build_parser()
    table: dict[str, set[str]] = {}
    for action in parser._subparsers._group_actions:
        for name, sp in action.choices.items():
            table[name] = {s for a in sp._actions for s in a.option_strings}
    return table


def _read_image(path: str) -> np.ndarray:
    if path.endswith(".pgm"):
        return read_pgm(path)
    return read_ct2(path)


def _write_image(path: str, img: np.ndarray) -> None:
    if path.endswith(".pgm"):
        write_pgm(path, img)
    else:
        write_ct2(path, img)


def _collect_config(args) -> runcfg.RunConfig:
    cfg = runcfg.RunConfig()
    if args.config:
        cfg = runcfg.run_config_from_text(Path(args.config).read_text(), source=args.config)
    overrides = {}
    for key in runcfg.CONFIG_SCHEMA:
        value = getattr(args, _dest(key), None)
        if value is not None:
            overrides[key] = value
    if args.mode is not None:
        overrides["mode_preset"] = args.mode
    return runcfg.run_config_from_keys(overrides, base=cfg)


def _cmd_phantom(args) -> int:
    img = make_phantom(args.name, args.size)
    _write_image(args.out, img)
    print(args.out)
    return 0


def _cmd_degrade(args) -> int:
    img = _read_image(args.input)
    h, w = img.shape
    if args.op == "identity-plus-noise":
        op = identity_operator((h, w), args.noise_sigma, args.seed)
    elif args.op in ("pixel-mask", "frequency-mask"):
        if h != w:
            raise ParameterError("mask operators require a square image")
        mask = make_sampling_mask(args.mask_kind, args.keep, h, seed=args.mask_seed)
        maker = pixel_mask_operator if args.op == "pixel-mask" else frequency_mask_operator
        op = maker(mask, args.noise_sigma, args.seed)
    else:
        kernel = (box_kernel(args.kernel_size) if args.kernel_sigma == 0
                  else gaussian_kernel(args.kernel_size, args.kernel_sigma))
        op = blur_operator((h, w), kernel, args.noise_sigma, args.seed)
    obs = degrade(op, img)
    write_observation(obs, args.out)
    print(args.out)
    return 0


def _cmd_restore(args) -> int:
    obs = read_observation(args.input)
    cfg = _collect_config(args)
    record = run(obs, cfg)
    write_run_dir(record, args.out)
    last = record.latest()
    if last is not None and last.psnr is not None:
        print(f"{args.out} steps={record.total_steps} psnr={last.psnr} "
              f"ssim={last.ssim} residual={last.residual}")
    else:
        print(f"{args.out} steps={record.total_steps}")
    return 0


def _cmd_metrics(args) -> int:
    ref = _read_image(args.ref)
    cand = _read_image(args.cand)
    rep = metricsmod.report(ref, cand, peak=args.peak, window=args.window)
    if args.format == "csv":
        print("psnr,ssim,rmse")
        print(f"{rep.psnr},{rep.ssim},{rep.rmse}")
    else:
        print(f"psnr={rep.psnr} ssim={rep.ssim} rmse={rep.rmse}")
    return 0


def _base_config(steps: int | None, seed: int) -> runcfg.RunConfig:
    cfg = replace(benchmod.default_config(), seed=seed)
    if steps is not None:
        cfg = replace(cfg, steps=steps)
    return cfg


def _cmd_bench(args) -> int:
    suite = benchmod.default_suite(args.seed, size=args.size)
    base = _base_config(args.steps, args.seed)
    benchmod.run_suite(suite, base, args.out, jobs=args.jobs, write_runs=not args.no_run_dirs)
    print(str(Path(args.out) / "ablation.csv"))
    return 0


def _cmd_sweep(args) -> int:
    suite = benchmod.default_suite(args.seed, size=args.size)
    case = benchmod.case_by_name(suite, args.case)
    base = _base_config(args.steps, args.seed)
    rows = benchmod.lambda_sweep(case, base, args.points, jobs=args.jobs)
    out = Path(args.out)
    from .tensorio import atomic_write_bytes

    atomic_write_bytes(out / "sweep.csv", benchmod.sweep_csv_text(rows).encode())
    print(str(out / "sweep.csv"))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        data_dir=args.data,
        jobs_max=args.jobs_max,
        ui_dir=args.ui,
        pace_millis=args.pace_millis,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


_COMMANDS = {
    "phantom": _cmd_phantom,
    "degrade": _cmd_degrade,
    "restore": _cmd_restore,
    "metrics": _cmd_metrics,
    "bench": _cmd_bench,
    "sweep": _cmd_sweep,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except ResteerError as exc:
        sys.stderr.write(f"resteer {args.command}: {exc}\n")
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failure boundary
        sys.stderr.write(f"resteer {args.command}: unexpected failure: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
