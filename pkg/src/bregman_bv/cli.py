"""Command-line interface.

Exit status: 0 on success, 2 on invalid input or usage, 1 on internal
errors. Every file written starts with a ``#`` line recording the
invocation (and the seed, where one applies).
"""

from __future__ import annotations

import argparse
import json
import math
import shlex
import sys

import numpy as np

from . import io
from .errors import BregmanError
from .estimators import bi_per_instance
from .families import classification_nll_decompose, get_family, nll_decompose
from .generators import DiscreteDistribution, lse_generator, softplus_generator
from .ood import (
    BI,
    CONFIDENCE,
    ThresholdModel,
    discard_curve,
    fit_threshold,
    labeled_predictions,
    uncertainty_scores,
)
from .regions import binary_region_interval, region_from_distribution, simplex_region_boundary

PROG = "bregman-bv"
_MEASURE = {"bi": BI, "confidence": CONFIDENCE}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _comment(argv, seed=None) -> str:
    text = " ".join([PROG, shlex.join(argv)])
    return text if seed is None else f"{text} seed={seed}"


def _emit(args, argv, header, rows, seed=None) -> None:
    if args.out:
        io.write_table(args.out, header, rows, _comment(argv, seed))
    else:
        w = sys.stdout.write
        w(",".join(header) + "\n")
        for row in rows:
            w(",".join(v if isinstance(v, str) else io.fmt(v) for v in row) + "\n")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_decompose(args, argv) -> int:
    if args.family == "categorical":
        ens = io.load_logit_dump(args.logits)
        labels = io.load_labels(args.labels, ens.instance_ids)
        k = ens.n_classes
        if np.any((labels < 0) | (labels >= k)):
            raise BregmanError(f"labels must lie in [0, {k})")
        counts = np.bincount(labels, minlength=k)
        if np.any(counts == 0):
            raise BregmanError(f"class {int(np.argmin(counts))} never occurs; target distribution is not strictly positive")
        Q = counts / counts.sum()
        zhat = DiscreteDistribution.from_samples(ens.values.reshape(-1, k))
        res = classification_nll_decompose(Q, zhat)
    else:
        ids, values = io.read_dump_array(args.logits, min_classes=1)
        if values.shape[2] != 1:
            raise BregmanError("normal family expects a single prediction column z0")
        y = io.load_labels(args.labels, ids, dtype=float)
        sigma = args.sigma
        fam = get_family("normal", sigma=sigma)
        log_norm = math.log(math.sqrt(2.0 * math.pi) * sigma)
        e_log_h = -float(np.mean(y**2)) / (2.0 * sigma**2) - log_norm
        theta_hat = DiscreteDistribution.from_samples(values.reshape(-1, 1) / sigma)
        res = nll_decompose(fam, [float(np.mean(y)) / sigma], theta_hat, e_log_h)
    rows = [("total", res.total), ("noise", res.noise), ("variance_bi", res.variance_bi),
            ("bias", res.bias), ("residual", res.residual)]
    _emit(args, argv, ("term", "value"), rows)
    return 0


def cmd_bi(args, argv) -> int:
    ens = io.load_logit_dump(args.logits)
    bis = bi_per_instance(ens)
    _emit(args, argv, ("instance_id", "bi"), zip(ens.instance_ids, bis))
    return 0


def cmd_region(args, argv) -> int:
    ens = io.load_logit_dump(args.logits)
    where = np.flatnonzero(ens.instance_ids == args.instance)
    if where.size == 0:
        raise BregmanError(f"instance_id {args.instance} not in {args.logits}")
    z = ens.values[where[0]]
    if ens.n_classes == 2:
        diffs = DiscreteDistribution.from_samples(z[:, 1:2] - z[:, 0:1])
        region = region_from_distribution(softplus_generator(), diffs, args.alpha)
        lo, hi = binary_region_interval(region)
        rows = [(float(region.center[0]), region.bound, lo, hi)]
        _emit(args, argv, ("center", "bound", "lo", "hi"), rows)
    elif ens.n_classes == 3:
        region = region_from_distribution(lse_generator(3), DiscreteDistribution.from_samples(z), args.alpha)
        pts = simplex_region_boundary(region, args.n_points)
        _emit(args, argv, ("p0", "p1", "p2"), [tuple(p) for p in pts])
    else:
        raise BregmanError("region export supports k = 2 (interval) and k = 3 (simplex) only")
    return 0


def cmd_threshold_fit(args, argv) -> int:
    _, values = io.read_value_column(args.bi)
    model = fit_threshold(values, args.q, _MEASURE[args.measure])
    print(repr(model.threshold))  # shortest round-trip form
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(f"# {_comment(argv)}\n")
            json.dump(model.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _load_model(path) -> ThresholdModel:
    with open(path, encoding="utf-8") as fh:
        text = "".join(line for line in fh if not line.lstrip().startswith("#"))
    try:
        return ThresholdModel.from_dict(json.loads(text))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise BregmanError(f"{path}: not a threshold model ({exc})") from None


def cmd_threshold_apply(args, argv) -> int:
    model = _load_model(args.model)
    ens = io.load_logit_dump(args.logits)
    u = uncertainty_scores(ens, model.measure_kind, args.member)
    keep = model.keep_mask(u)
    rows = [(i, v, "Kept" if k else "OOD") for i, v, k in zip(ens.instance_ids, u, keep)]
    _emit(args, argv, ("instance_id", "uncertainty", "decision"), rows)
    return 0


def _parse_quantiles(text: str) -> list[float]:
    try:
        qs = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise BregmanError(f"bad quantile list {text!r}") from None
    if not qs or any(b <= a for a, b in zip(qs, qs[1:])):
        raise BregmanError("quantiles must be a nonempty, strictly increasing list")
    return qs


def cmd_curve(args, argv) -> int:
    measure = _MEASURE[args.measure]
    val = io.load_logit_dump(args.val_logits)
    test = io.load_logit_dump(args.test_logits)
    if val.n_classes != test.n_classes:
        raise BregmanError("validation and test dumps have different class counts")
    labels = io.load_labels(args.test_labels, test.instance_ids)
    preds = labeled_predictions(test, labels, measure, args.member)
    rows = discard_curve(uncertainty_scores(val, measure, args.member), preds,
                         _parse_quantiles(args.quantiles), measure)
    if args.out:
        io.write_curve(args.out, rows, _comment(argv))
    else:
        _emit(args, argv, io.CURVE_HEADER, rows)
    return 0


def cmd_simulate(args, argv) -> int:
    from .sim import ClassifierSpec, GridSpec, ToyTaskSpec, bi_map

    task = ToyTaskSpec(args.task, noise_scale=args.noise, seed=args.seed)
    clf = ClassifierSpec(args.classifier, init_seed=args.seed)
    bimap = bi_map(clf, task, args.method, args.samples, GridSpec(args.grid, args.grid))
    pts = bimap.points()
    _emit(args, argv, ("x0", "x1", "bi"),
          [(a, b, v) for (a, b), v in zip(pts, bimap.values.ravel())], seed=args.seed)
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog=PROG, description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("decompose", help="noise / variance / bias of the pooled NLL")
    d.add_argument("--family", choices=("categorical", "normal"), required=True)
    d.add_argument("--logits", required=True)
    d.add_argument("--labels", required=True)
    d.add_argument("--sigma", type=float, default=1.0, help="known std (normal family)")
    d.add_argument("--out")
    d.set_defaults(func=cmd_decompose)

    b = sub.add_parser("bi", help="per-instance LogSumExp Bregman Information")
    b.add_argument("--logits", required=True)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bi)

    r = sub.add_parser("region", help="confidence interval (k=2) or simplex boundary (k=3)")
    r.add_argument("--logits", required=True)
    r.add_argument("--instance", type=int, required=True)
    r.add_argument("--alpha", type=float, required=True)
    r.add_argument("--n-points", type=int, default=64)
    r.add_argument("--out")
    r.set_defaults(func=cmd_region)

    t = sub.add_parser("threshold", help="fit or apply an uncertainty threshold")
    tsub = t.add_subparsers(dest="action", required=True, parser_class=_Parser)
    tf = tsub.add_parser("fit")
    tf.add_argument("--bi", required=True, help="table instance_id,<uncertainty>")
    tf.add_argument("--q", type=float, required=True)
    tf.add_argument("--measure", choices=tuple(_MEASURE), default="bi")
    tf.add_argument("--out", help="write the model as JSON")
    tf.set_defaults(func=cmd_threshold_fit)
    ta = tsub.add_parser("apply")
    ta.add_argument("--model", required=True)
    ta.add_argument("--logits", required=True)
    ta.add_argument("--member", type=int, default=0)
    ta.add_argument("--out")
    ta.set_defaults(func=cmd_threshold_apply)

    c = sub.add_parser("curve", help="accuracy / NLL discard curve")
    c.add_argument("--val-logits", required=True)
    c.add_argument("--test-logits", required=True)
    c.add_argument("--test-labels", required=True)
    c.add_argument("--measure", choices=tuple(_MEASURE), default="bi")
    c.add_argument("--quantiles", default="0.5,0.6,0.7,0.8,0.9,1.0")
    c.add_argument("--member", type=int, default=0, help="member used as the classifier")
    c.add_argument("--out")
    c.set_defaults(func=cmd_curve)

    s = sub.add_parser("simulate", help="BI map of a toy classifier")
    s.add_argument("--task", choices=("moons", "circles", "linear-blobs", "drift-blobs"), default="moons")
    s.add_argument("--classifier", choices=("logistic", "knn", "gaussian-naive-bayes", "tiny-mlp"),
                   default="logistic")
    s.add_argument("--method", choices=("resample-truth", "bootstrap", "reinit-ensemble"),
                   default="resample-truth")
    s.add_argument("--samples", type=int, default=64)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--noise", type=float, default=0.2)
    s.add_argument("--grid", type=int, default=60)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except (BregmanError, ValueError, IndexError, KeyError, OSError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"{PROG}: internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
