"""
Command line entry point

    python -m app.cli run --synthetic shifting-square --epsilon 0.01 --oracle --report out/run.json
    python -m app.cli sweep --synthetic shifting-square --noise 0.02 --epsilons 0.01,0.03,0.05,0.1
    python -m app.cli calibrate --synthetic shifting-square --videos 4 --epsilon 0.03 --out out/error_model.json
    python -m app.cli make-model --input-shape 1,32,32 --out out/model.rrmm
    python -m app.cli make-frames --synthetic random-walk --motion 0.01 --out out/frames

Exit codes: 0 success, 1 usage error, 2 data-format error, 3 numeric failure.
"""
import argparse
import logging
import sys
from typing import List, Optional, Sequence, Tuple

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import RRMError, UsageError
from app.core.logging_config import setup_logging
from app.models.network import NetworkModel
from app.models.tensor import Tensor
from app.schemas.frames import STANDARD_PLAN, FrameSourceSpec
from app.services import model_io, run_service, synthetic
from app.services.report_service import load_error_model, save_error_model

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _shape(text: str) -> Tuple[int, int, int]:
    try:
        c, h, w = (int(v) for v in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected C,H,W, got {text!r}") from e
    return c, h, w


def _add_source_args(parser: argparse.ArgumentParser):
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--frames", help="directory of binary frame files")
    source.add_argument("--synthetic", choices=sorted(synthetic.GENERATORS), help="synthetic video kind")
    parser.add_argument("--size", type=int, default=32)
    parser.add_argument("--channels", type=int, default=1)
    parser.add_argument("--frame-count", type=int, default=24)
    parser.add_argument("--motion", type=float, default=1.0)
    parser.add_argument("--noise", type=float, default=0.0)
    parser.add_argument("--seed", type=int, default=0)


def _add_model_args(parser: argparse.ArgumentParser):
    parser.add_argument("--model", help="binary model file; defaults to the standard random model")
    parser.add_argument("--model-seed", type=int, default=0)


def _add_run_args(parser: argparse.ArgumentParser):
    parser.add_argument("--error-model", help="error model file enabling keyframe control")
    parser.add_argument("--error-threshold", type=float, help="override the error model's threshold")
    parser.add_argument("--chunks", type=int, default=None)
    parser.add_argument("--exclude-keyframes", action="store_true", help="leave keyframes out of eta")
    parser.add_argument("--report", help="JSON report path (CSV written alongside); stdout when omitted")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rrm", description="Recurrent residual inference runtime")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="process one video")
    _add_source_args(run)
    _add_model_args(run)
    _add_run_args(run)
    run.add_argument("--epsilon", type=float, default=None)
    run.add_argument("--oracle", action="store_true", help="run dense inference side by side")
    run.add_argument("--keyframe-interval", type=int, default=None)

    sweep = sub.add_parser("sweep", help="one run per truncation threshold")
    _add_source_args(sweep)
    _add_model_args(sweep)
    _add_run_args(sweep)
    sweep.add_argument("--epsilons", type=_floats, default=[1e-2, 3e-2, 5e-2, 1e-1])

    cal = sub.add_parser("calibrate", help="fit the error model on synthetic or recorded videos")
    _add_source_args(cal)
    _add_model_args(cal)
    cal.add_argument("--videos", type=int, default=2, help="number of synthetic videos (seeds seed, seed+1, ...)")
    cal.add_argument("--epsilon", type=float, default=None)
    cal.add_argument("--error-threshold", type=float, default=None)
    cal.add_argument("--threshold-fraction", type=float, default=None,
                     help="set the threshold to the predicted error at this fraction of the largest e_t")
    cal.add_argument("--out", required=True)

    make_model = sub.add_parser("make-model", help="write a random model file")
    make_model.add_argument("--input-shape", type=_shape, default=(1, 32, 32))
    make_model.add_argument("--plan", default=",".join(STANDARD_PLAN))
    make_model.add_argument("--model-seed", type=int, default=0)
    make_model.add_argument("--out", required=True)

    make_frames = sub.add_parser("make-frames", help="write a synthetic video as frame files")
    _add_source_args(make_frames)
    make_frames.add_argument("--out", required=True)
    return parser


def _source_spec(args, seed_offset: int = 0) -> FrameSourceSpec:
    return FrameSourceSpec(
        kind=args.synthetic or "shifting-square",
        channels=args.channels,
        size=args.size,
        frames=args.frame_count,
        motion=args.motion,
        noise=args.noise,
        seed=args.seed + seed_offset,
    )


def _load_frames(args) -> Tuple[List[Tensor], object]:
    if args.frames:
        return model_io.load_frames(args.frames), args.frames
    spec = _source_spec(args)
    return synthetic.generate_frames(spec), spec


def _load_model(args, input_shape) -> Tuple[NetworkModel, Optional[str]]:
    if args.model:
        return model_io.load_model(args.model), args.model
    return synthetic.standard_model(input_shape, seed=args.model_seed), None


def _emit(report, path):
    if path is None:
        sys.stdout.write(report.model_dump_json(indent=2) + "\n")


def _error_model(args):
    if args.error_model is None:
        if args.error_threshold is not None:
            raise UsageError("--error-threshold needs --error-model")
        return None
    return load_error_model(args.error_model, args.error_threshold)


def _cmd_run(args) -> int:
    frames, source = _load_frames(args)
    model, label = _load_model(args, frames[0].shape)
    error_model = _error_model(args)
    report = run_service.cmd_run(
        model,
        frames,
        epsilon=args.epsilon,
        error_model=error_model,
        report_path=args.report,
        chunks=args.chunks,
        oracle=args.oracle or None,
        include_keyframes=False if args.exclude_keyframes else None,
        keyframe_interval=args.keyframe_interval,
        model_label=label,
        source=source,
    )
    _emit(report, args.report)
    return 0


def _cmd_sweep(args) -> int:
    frames, source = _load_frames(args)
    model, label = _load_model(args, frames[0].shape)
    error_model = _error_model(args)
    report = run_service.cmd_sweep(
        model,
        frames,
        args.epsilons,
        report_path=args.report,
        chunks=args.chunks,
        include_keyframes=False if args.exclude_keyframes else None,
        error_model=error_model,
        model_label=label,
        source=source,
    )
    _emit(report, args.report)
    return 0


def _cmd_calibrate(args) -> int:
    if args.frames:
        videos = [model_io.load_frames(args.frames)]
    else:
        videos = [synthetic.generate_frames(_source_spec(args, i)) for i in range(args.videos)]
    model, _ = _load_model(args, videos[0][0].shape)
    epsilon = settings.RRM_EPSILON if args.epsilon is None else args.epsilon
    fitted = run_service.cmd_calibrate(model, videos, epsilon, threshold=args.error_threshold)
    if args.threshold_fraction is not None:
        fitted = fitted.with_threshold(run_service.suggest_threshold(fitted, args.threshold_fraction))
    save_error_model(fitted, epsilon, args.out)
    return 0


def _cmd_make_model(args) -> int:
    plan = [token for token in args.plan.split(",") if token.strip()]
    model = synthetic.build_random_model(args.input_shape, plan, seed=args.model_seed)
    model_io.save_model(model, args.out)
    logger.info(f"Model with {len(model.layers)} layers written to {args.out}")
    return 0


def _cmd_make_frames(args) -> int:
    frames = synthetic.generate_frames(_source_spec(args))
    model_io.save_frames(frames, args.out)
    logger.info(f"{len(frames)} frames written to {args.out}")
    return 0


COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "calibrate": _cmd_calibrate,
    "make-model": _cmd_make_model,
    "make-frames": _cmd_make_frames,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        setup_logging(level=args.log_level)
        return COMMANDS[args.command](args)
    except ValidationError as e:
        sys.stderr.write(f"error: invalid arguments: {e}\n")
        return UsageError.exit_code
    except RRMError as e:
        logger.error(f"{type(e).__name__}: {e}")
        sys.stderr.write(f"error: {e}\n")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
