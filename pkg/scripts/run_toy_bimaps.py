"""BI maps of the toy classifiers under three sampling schemes.

For each task and classifier this writes the ground-truth map (fresh
training sets), the bootstrap estimate and, for the MLP, the
re-initialisation ensemble. With matplotlib installed a PNG panel per
task is written as well.

    python3 scripts/run_toy_bimaps.py --tasks moons circles --samples 64
"""

import argparse
import os

from bregman_bv import io
from bregman_bv.sim import ClassifierSpec, GridSpec, ToyTaskSpec, bi_map

CLASSIFIERS = ("logistic", "knn", "gaussian-naive-bayes", "tiny-mlp")


def methods_for(kind):
    return ("resample-truth", "bootstrap", "reinit-ensemble") if kind == "tiny-mlp" else ("resample-truth", "bootstrap")


def plot(maps, task, path):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return False
    kinds = sorted({k for k, _ in maps}, key=CLASSIFIERS.index)
    methods = ("resample-truth", "bootstrap", "reinit-ensemble")
    fig, axes = plt.subplots(len(kinds), 3, figsize=(10, 3 * len(kinds)), squeeze=False)
    for i, kind in enumerate(kinds):
        for j, method in enumerate(methods):
            ax = axes[i, j]
            ax.set_xticks([])
            ax.set_yticks([])
            m = maps.get((kind, method))
            if m is None:
                ax.axis("off")
                continue
            ax.pcolormesh(m.xs, m.ys, m.values, shading="auto", cmap="viridis")
            ax.set_title(f"{kind} / {method}", fontsize=8)
    fig.suptitle(task)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--tasks", nargs="+", default=["moons", "circles", "linear-blobs"])
    p.add_argument("--classifiers", nargs="+", default=list(CLASSIFIERS), choices=CLASSIFIERS)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--grid", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results/bimaps")
    args = p.parse_args()
    os.makedirs(args.out, exist_ok=True)

    for shape in args.tasks:
        task = ToyTaskSpec(shape, seed=args.seed)
        maps = {}
        for kind in args.classifiers:
            clf = ClassifierSpec(kind, init_seed=args.seed)
            for method in methods_for(kind):
                m = bi_map(clf, task, method, args.samples, GridSpec(args.grid, args.grid))
                maps[kind, method] = m
                path = os.path.join(args.out, f"{shape}_{kind}_{method}.csv")
                rows = [(a, b, v) for (a, b), v in zip(m.points(), m.values.ravel())]
                io.write_table(path, ("x0", "x1", "bi"), rows, f"bi map {shape} {kind} {method} "
                                                              f"samples={args.samples} seed={args.seed}")
                print(f"{shape:13s} {kind:21s} {method:16s} max {m.values.max():.4f} mean {m.values.mean():.4f}")
        if plot(maps, shape, os.path.join(args.out, f"{shape}.png")):
            print(f"wrote {shape}.png")


if __name__ == "__main__":
    main()
