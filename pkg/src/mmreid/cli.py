"""Command line: ``mmreid {synth,split,rerank,eval,loss-check,sweep}``.

Every output carries a ``provenance`` block with the tool version and the
full, validated run configuration. Exit codes: 0 success, 2 configuration
error, 3 file-format error, 4 protocol error.
"""
import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .cidhl import cidhl_loss, finite_difference_check, triplet_hard_loss
from .core import LossConfig, MiniBatch, ReRankConfig, pairwise_distances
from .errors import EXIT_CONFIG, ConfigError, FormatError, MMReIDError
from .formats import load_distance_map, load_features, save_distance_map, save_features, save_features_csv
from .mbsos import rerank
from .metrics import evaluate
from .splitter import SplitResult, SplitSpec, build_split
from .synth import SynthSpec, generate_synthetic

log = logging.getLogger("mmreid")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("ranks must be positive integers")
    return values


def provenance(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return {"tool": "mmreid", "version": __version__, "run": json.loads(json.dumps(cfg, default=str))}


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_split(path):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read split file: {exc}", path) from None
    return SplitResult.from_dict(doc)


def _query_gallery(features_path, split_path):
    pool = load_features(features_path)
    split = _load_split(split_path)
    split.check_pool(pool)
    return pool.subset(split.query_indices), pool.subset(split.gallery_indices)


def _distances(query, gallery, source, lam):
    if source == "raw":
        return pairwise_distances(query, gallery)
    return rerank(query, gallery, ReRankConfig(lam))


def cmd_synth(args):
    spec = SynthSpec(args.identities, args.per_modality, args.dim, args.sigma_id, args.sigma_mod,
                     args.seed, args.anchor_scale)
    es = generate_synthetic(spec)
    out = Path(args.out)
    (save_features_csv if out.suffix.lower() == ".csv" else save_features)(es, out)
    Path(str(out) + ".json").write_text(json.dumps({"provenance": provenance(args)}, indent=2, sort_keys=True) + "\n")
    log.info("wrote %d samples to %s", len(es), out)


def cmd_split(args):
    pool = load_features(args.features)
    result = build_split(pool, SplitSpec(args.ratio, args.seed))
    _write_text(args.out, result.to_json(provenance=provenance(args)))
    log.info("query %d / gallery %d", len(result.query_indices), len(result.gallery_indices))


def cmd_rerank(args):
    query, gallery = _query_gallery(args.features, args.split)
    optimized, raw = rerank(query, gallery, ReRankConfig(args.lam), return_raw=True)
    save_distance_map(args.out, raw, optimized, provenance=provenance(args))
    log.info("%d x %d map, %.1f%% of entries kept the direct edge",
             *optimized.shape, 100 * optimized.direct_fraction())


def cmd_eval(args):
    query, gallery = _query_gallery(args.features, args.split)
    if args.maps:
        raw, opt, _ = load_distance_map(args.maps)
        dist = raw.entries if args.source == "raw" else opt
        if dist is None:
            raise FormatError("map file has no optimized entries", args.maps)
    else:
        dist = _distances(query, gallery, args.source, args.lam)
    report = evaluate(dist, query, gallery, args.ranks)
    _write_text(args.out, report.to_json(provenance=provenance(args), source=args.source))
    if args.csv:
        Path(args.csv).write_text(report.to_csv())


def cmd_loss_check(args):
    cfg = LossConfig(args.margin, args.delta)
    es = generate_synthetic(SynthSpec(args.P, args.K, args.dim, args.sigma_id, args.sigma_mod, args.seed,
                                      args.anchor_scale))
    batch = MiniBatch(es, args.P, args.K)
    rep = cidhl_loss(batch, cfg)
    doc = {
        "provenance": provenance(args),
        "l_cid": rep.l_cid, "l_dh": rep.l_dh, "l_cidhl": rep.l_cidhl,
        "l_th": triplet_hard_loss(batch, cfg).l_th,
        "active_terms": rep.active_terms,
        "mean_per_anchor": rep.mean_per_anchor,
        "gradient_norm": float(np.linalg.norm(rep.gradient)),
        "fd_max_rel_error": finite_difference_check(batch, cfg, args.step),
        "fd_step": args.step,
    }
    _write_text(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_sweep(args):
    values = args.values
    if not values:
        raise ConfigError("--values is empty")
    if args.param == "delta" and "{value}" not in args.features:
        raise ConfigError("a delta sweep needs --features with a '{value}' placeholder "
                          "naming one embedding file per trained delta")
    rows = []
    for v in values:
        feats = args.features.replace("{value}", format(v, "g"))
        query, gallery = _query_gallery(feats, args.split)
        lam = v if args.param == "lambda" else args.lam
        rep = evaluate(_distances(query, gallery, args.source, lam), query, gallery, args.ranks)
        rows.append({"param": args.param, "value": v, **rep.summary_row()})
    buf = io.StringIO()
    buf.write("# " + json.dumps(provenance(args), sort_keys=True) + "\n")
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    _write_text(args.out, buf.getvalue())


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("--threads", type=int, default=None, help="cap worker threads (default: $MMREID_THREADS)")
    p = _Parser(prog="mmreid", description="Mix-modality re-identification evaluation kit")
    p.add_argument("--version", action="version", version=f"mmreid {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    s = sub.add_parser("synth", help="generate a synthetic feature file")
    s.add_argument("--identities", "-P", type=int, default=20)
    s.add_argument("--per-modality", "-K", type=int, default=10)
    s.add_argument("--dim", "-D", type=int, default=16)
    s.add_argument("--sigma-id", type=float, default=0.3)
    s.add_argument("--sigma-mod", type=float, default=0.0)
    s.add_argument("--anchor-scale", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="*.csv writes the CSV twin, anything else the binary format")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("split", help="build a mix-modality query/gallery split")
    s.add_argument("--features", required=True)
    s.add_argument("--ratio", default="3:7", help="visible:infrared share of the query, e.g. 3:7")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_split)

    def retrieval(s):
        s.add_argument("--features", required=True)
        s.add_argument("--split", required=True)
        s.add_argument("--lambda", dest="lam", type=float, default=0.999)

    s = sub.add_parser("rerank", help="compute raw and bridge-optimized distance maps")
    retrieval(s)
    s.add_argument("--out", required=True, help="output .npz")
    s.set_defaults(func=cmd_rerank)

    s = sub.add_parser("eval", help="score retrieval with CMC / mAP / mINP")
    retrieval(s)
    s.add_argument("--source", choices=("raw", "mbsos"), default="mbsos")
    s.add_argument("--maps", help="reuse a map file written by 'rerank'")
    s.add_argument("--ranks", type=_int_list, default=[1, 5, 10])
    s.add_argument("--out", default="-")
    s.add_argument("--csv", help="also write the per-query table here")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("loss-check", help="CIDHL on a synthetic batch with a finite-difference gradient check")
    s.add_argument("--P", type=int, default=4)
    s.add_argument("--K", type=int, default=4)
    s.add_argument("--dim", "-D", type=int, default=8)
    s.add_argument("--margin", type=float, default=0.3)
    s.add_argument("--delta", type=float, default=0.2)
    s.add_argument("--sigma-id", type=float, default=0.5)
    s.add_argument("--sigma-mod", type=float, default=0.3)
    s.add_argument("--anchor-scale", type=float, default=1.0)
    s.add_argument("--step", type=float, default=1e-6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_loss_check)

    s = sub.add_parser("sweep", help="metrics as a function of lambda or delta")
    retrieval(s)
    s.add_argument("--param", choices=("lambda", "delta"), default="lambda")
    s.add_argument("--values", type=_float_list, required=True)
    s.add_argument("--source", choices=("raw", "mbsos"), default="mbsos")
    s.add_argument("--ranks", type=_int_list, default=[1, 5, 10])
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _kernels.configure_threads(args.threads)
        args.func(args)
    except MMReIDError as exc:
        print(f"mmreid: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"mmreid: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
