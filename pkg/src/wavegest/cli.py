"""Command-line pipeline: generate demos, train, condition, sample, render.

Example::

    wavegest gen-demos --out demos --seed 1
    wavegest train --demos demos --k 25 --out model.json
    wavegest condition --model model.json --set amp:dof=2,k=10,value=5 \\
        --out elbow10.json
    wavegest synthesize --model elbow10.json --seed 3 --out wave.csv
    wavegest render --chain arm6.json --traj wave.csv --stride 10 \\
        --plane xz --out wave.svg
"""
import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import dataset_io, generator, kinematics, model, synthesis


class CLIError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError(f"{self.prog}: {message}")


def parse_constraint(text):
    """Parse ``amp:dof=2,k=10,value=5`` into a :class:`ConditioningConstraint`.

    The component is one of ``amp``, ``phase`` or ``dc``; ``k`` defaults to
    0 for ``dc``.
    """
    component, sep, rest = text.partition(":")
    if not sep or component not in model.COMPONENTS:
        raise CLIError(
            f"--set {text!r}: expected <amp|phase|dc>:dof=<d>,k=<k>,value=<v>")
    fields = {}
    for item in rest.split(","):
        key, eq, value = item.partition("=")
        if not eq or key.strip() not in ("dof", "k", "value"):
            raise CLIError(f"--set {text!r}: bad field {item!r}")
        fields[key.strip()] = value.strip()
    if component == model.DC:
        fields.setdefault("k", "0")
    missing = {"dof", "k", "value"} - set(fields)
    if missing:
        raise CLIError(f"--set {text!r}: missing {', '.join(sorted(missing))}")
    try:
        return model.ConditioningConstraint(
            int(fields["dof"]), int(fields["k"]), component,
            float(fields["value"]))
    except ValueError as e:
        raise CLIError(f"--set {text!r}: {e}") from None


def _guard_output(out, *inputs):
    out = Path(out).resolve()
    for path in inputs:
        if path is not None and Path(path).resolve() == out:
            raise CLIError(f"--out {out} would overwrite input file {path}")


def _parent(path):
    parent = Path(path).parent
    if str(parent):
        os.makedirs(parent, exist_ok=True)


def cmd_gen_demos(args):
    if args.spec is None:
        spec_path = Path(__file__).parent / "data" / "wave_protocol.json"
    else:
        spec_path = args.spec
    spec = generator.load_generator_spec(spec_path)
    dataset = generator.generate_dataset(spec, args.seed)
    paths = dataset_io.save_dataset(dataset, args.out)
    print(f"wrote {len(paths)} demonstrations (D={dataset.D}) to {args.out}")


def cmd_train(args):
    dataset = dataset_io.load_dataset(args.demos)
    gm = model.fit_model(dataset, args.k, args.lam, args.eps_r)
    _parent(args.out)
    model.save_model(gm, args.out)
    print(f"trained on M={dataset.M} demos: D={gm.D}, K={gm.K}, "
          f"dimension {gm.dim}, ref_duration {gm.ref_duration:.4g} s")


def _request(gm, args):
    duration = gm.ref_duration if args.duration is None else args.duration
    return synthesis.SynthesisRequest(duration, args.rate)


def cmd_sample(args):
    gm = model.load_model(args.model)
    req = _request(gm, args)
    os.makedirs(args.out, exist_ok=True)
    for i in range(args.n):
        rng = np.random.default_rng([args.seed, i])
        demo = synthesis.sample_gesture(gm, rng, req, name=f"sample_{i:03d}")
        dataset_io.save_demo(demo, Path(args.out) / f"sample_{i:03d}.csv")
    print(f"wrote {args.n} sampled gestures to {args.out}")


def cmd_condition(args):
    _guard_output(args.out, args.model)
    gm = model.load_model(args.model)
    constraints = [parse_constraint(s) for s in args.set]
    out = model.condition(gm, constraints)
    _parent(args.out)
    model.save_model(out, args.out)
    print(f"conditioned on {len(constraints)} constraint(s), wrote {args.out}")


def cmd_synthesize(args):
    _guard_output(args.out, args.model)
    gm = model.load_model(args.model)
    req = _request(gm, args)
    if args.time_scale != 1.0:
        req = synthesis.time_scale(req, args.time_scale)
    x = model.sample_model(gm, args.seed)
    if args.scale_amp != 1.0:
        x = synthesis.scale_amplitude(x, gm.K, args.scale_amp)
    demo = synthesis.synthesize(x, gm.D, gm.K, gm.ref_duration, req,
                                name=f"synth_seed{args.seed}")
    _parent(args.out)
    dataset_io.save_demo(demo, args.out)
    print(f"wrote {demo.T} samples x {demo.D} joints to {args.out}")


def cmd_spectrum(args):
    _guard_output(args.out, args.model)
    gm = model.load_model(args.model)
    spec = synthesis.spectrum_stats(gm, include_dc=args.include_dc)
    _parent(args.out)
    synthesis.write_spectrum(spec, args.out, include_dc=args.include_dc)
    print(f"wrote spectrum ({gm.D} joints x {spec.shape[1]} harmonics) "
          f"to {args.out}")


def cmd_render(args):
    _guard_output(args.out, args.chain, args.traj)
    chain = kinematics.load_chain(args.chain)
    demo = dataset_io.load_demo(args.traj)
    svg = kinematics.render_overlay(chain, demo, args.stride, args.plane,
                                    scale=args.scale, title=demo.name)
    violations = kinematics.check_joint_limits(chain, demo)
    _parent(args.out)
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        f.write(svg)
    n_frames = -(-demo.T // args.stride)
    print(f"rendered {n_frames} poses to {args.out}; "
          f"{len(violations)} joint-limit violation(s)")


def build_parser():
    parser = _Parser(prog="wavegest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("gen-demos", help="generate a synthetic dataset")
    p.add_argument("--spec", help="generator spec JSON (default: built-in "
                   "wave protocol)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_demos)

    p = sub.add_parser("train", help="fit a gesture model")
    p.add_argument("--demos", required=True)
    p.add_argument("--k", type=int, default=25)
    p.add_argument("--lambda", dest="lam", type=float,
                   default=model.DEFAULT_LAMBDA)
    p.add_argument("--eps-r", type=float, default=model.DEFAULT_EPS_R)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="sample gestures from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float)
    p.add_argument("--rate", type=float, default=100.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("condition", help="condition a model on coordinates")
    p.add_argument("--model", required=True)
    p.add_argument("--set", required=True, action="append", metavar="CONSTRAINT",
                   help="amp:dof=D,k=K,value=V | phase:... | dc:dof=D,value=V "
                   "(repeatable)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_condition)

    p = sub.add_parser("synthesize", help="sample and modulate one gesture")
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float)
    p.add_argument("--rate", type=float, default=100.0)
    p.add_argument("--scale-amp", type=float, default=1.0)
    p.add_argument("--time-scale", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("spectrum", help="write the mean amplitude spectrum")
    p.add_argument("--model", required=True)
    p.add_argument("--include-dc", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("render", help="render overlaid poses as SVG")
    p.add_argument("--chain", required=True)
    p.add_argument("--traj", required=True)
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--plane", choices=sorted(kinematics.PLANES), default="xz")
    p.add_argument("--scale", type=float, help="millimeters per meter")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def run(argv=None):
    """Run one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CLIError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            args.func(args)
            code = 0
        except (CLIError, ValueError, OSError, LookupError, ArithmeticError,
                np.linalg.LinAlgError) as e:
            message = " ".join(str(e).split())
            print(f"error: {args.command}: {message}", file=sys.stderr)
            code = 1
    for w in dict.fromkeys(str(w.message) for w in caught):
        print(f"warning: {w}", file=sys.stderr)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
