"""``care-lab`` command line: data generation, structure learning, training
and experiments."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bayesnet, harness, synthgen
from .acr import ACRConfig, fit_acr
from .dataset import infer_schema, load_csv, write_csv
from .fci import CausalMask, extract_mask, run_fci
from .model import LR, MLP, TrainConfig

log = logging.getLogger("carelab")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _load(path: str, target: str):
    return load_csv(path, infer_schema(path, target), target)


def cmd_gen_data(args) -> None:
    data = synthgen.generate(synthgen.SynthConfig(args.n, args.mode, args.seed))
    write_csv(data, args.out)


def cmd_sample_bn(args) -> None:
    net = bayesnet.read_bif(args.bif)
    data = bayesnet.ancestral_sample(net, args.n, args.seed)
    if args.target:
        data = bayesnet.binarize_target(data, args.target, tuple(args.positive.split(",")))
    write_csv(data, args.out)


def cmd_fci(args) -> None:
    data = _load(args.infile, args.target)
    pag = run_fci(data, args.tester, args.alpha, args.max_depth, args.seed)
    out = Path(args.out)
    out.write_text(json.dumps(pag.to_json(), indent=2) + "\n")
    mask_path = Path(args.mask_out) if args.mask_out else out.with_name("mask.json")
    mask = extract_mask(pag, data.target_name)
    mask_path.write_text(json.dumps(mask.as_dict(), indent=2) + "\n")
    for a, b, ma, mb in pag.edges():
        print(pag.edge_string(a, b))


def cmd_train(args) -> None:
    data = _load(args.infile, args.target)
    if args.mask:
        mask = CausalMask.from_json(json.loads(Path(args.mask).read_text()))
    else:
        mask = CausalMask.full(data.names)
    tcfg = TrainConfig(max_iters=args.max_iters, seed=args.seed)
    cfg = ACRConfig(args.lam, args.model, seed=args.seed, train=tcfg)
    model = fit_acr(data, mask, cfg)
    Path(args.out).write_text(model.dumps() + "\n")


def cmd_experiment(args) -> None:
    defaults = {
        "lambda_sweep": {"lambda_grid": harness.LAMBDA_GRID},
        "alarm_scenarios": {"tester": "g_squared"},
        "custom_csv": {"tester": "auto", "lambda_grid": (1e-2,)},
    }.get(args.name, {})
    fields = dict(defaults)
    if args.seeds:
        fields["seeds"] = _ints(args.seeds)
    if args.lambda_grid:
        fields["lambda_grid"] = _floats(args.lambda_grid)
    for key in ("bif", "data", "test", "target", "tester", "folds", "workers"):
        value = getattr(args, key)
        if value is not None:
            name = {"bif": "bif_path", "data": "data_path", "test": "test_path"}.get(key, key)
            fields[name] = value
    cfg = harness.ExperimentConfig(args.name, **fields)
    result = harness.run_experiment(cfg)
    out = result.write(args.out)
    print(f"wrote {out / 'results.json'}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="care-lab", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="draw the synthetic benchmark")
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--mode", choices=("train", "test"), default="train")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("sample-bn", help="ancestral samples from a BIF network")
    s.add_argument("--bif", required=True)
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--target", default=None)
    s.add_argument("--positive", default="HIGH", help="comma-separated positive levels")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample_bn)

    f = sub.add_parser("fci", help="learn a PAG and the causal mask")
    f.add_argument("--in", dest="infile", required=True)
    f.add_argument("--target", required=True)
    f.add_argument("--alpha", type=float, default=0.1)
    f.add_argument("--tester", choices=("auto", "fisher_z", "g_squared", "permutation"), default="auto")
    f.add_argument("--max-depth", type=int, default=3)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", required=True, help="pag.json")
    f.add_argument("--mask-out", default=None, help="defaults to mask.json next to --out")
    f.set_defaults(func=cmd_fci)

    t = sub.add_parser("train", help="fit a model with the causal penalty")
    t.add_argument("--in", dest="infile", required=True)
    t.add_argument("--target", required=True)
    t.add_argument("--mask", default=None, help="mask.json; all ones when omitted")
    t.add_argument("--lambda", dest="lam", type=float, default=1e-2)
    t.add_argument("--model", choices=(LR, MLP), default=MLP)
    t.add_argument("--max-iters", type=int, default=1000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("experiment", help="run an experiment and write results")
    e.add_argument("name", choices=harness.EXPERIMENTS)
    e.add_argument("--seeds", default=None, help="comma-separated, e.g. 0,1,2")
    e.add_argument("--lambda-grid", default=None, help="comma-separated lambdas")
    e.add_argument("--bif", default=None)
    e.add_argument("--data", default=None, help="CSV for custom_csv")
    e.add_argument("--test", default=None, help="optional held-out CSV for custom_csv")
    e.add_argument("--target", default=None)
    e.add_argument("--tester", default=None)
    e.add_argument("--folds", type=int, default=None)
    e.add_argument("--workers", type=int, default=None)
    e.add_argument("--out", default="results")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"care-lab {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
