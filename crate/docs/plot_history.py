"""Plot a search_history.csv written by `egoae search`.

usage: python docs/plot_history.py search_history.csv [out.png]

Top panel: best and mean fitness per generation. Bottom panel: time per
generation split into scratch matching, incremental matching and model
evaluation. Needs matplotlib.
"""

import csv
import sys

import matplotlib.pyplot as plt


def main() -> None:
    if len(sys.argv) not in (2, 3):
        sys.exit(__doc__)
    with open(sys.argv[1], newline="") as f:
        rows = list(csv.DictReader(f))
    gen = [int(r["generation"]) for r in rows]
    col = lambda name: [float(r[name]) for r in rows]

    fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    top.plot(gen, col("best_fitness"), marker="o", label="best")
    top.plot(gen, col("mean_fitness"), marker=".", label="mean")
    top.set_ylabel("validation accuracy")
    top.legend()

    parts = ["scratch_match_s", "incremental_match_s", "eval_s"]
    labels = ["scratch matching", "incremental matching", "evaluation"]
    bottom.stackplot(gen, *[col(p) for p in parts], labels=labels)
    bottom.set_xlabel("generation")
    bottom.set_ylabel("seconds")
    bottom.legend(loc="upper left")
    fig.tight_layout()

    if len(sys.argv) == 3:
        fig.savefig(sys.argv[2], dpi=120)
    else:
        plt.show()


if __name__ == "__main__":
    main()
