"""Compare dictionary sizes and descriptor families on synthetic flows, printing a pivot table.

Run: python demos/dictionary_sweep.py
"""

from flowdesc.evaluation import dictionary_grid, pivot_table, sweep_dictionary
from flowdesc.forest import ForestParams
from flowdesc.stages import Experiment
from flowdesc.synth import synth_dataset


def main() -> None:
    recs = synth_dataset(160, seed=4, width=96, height=64)
    train, test = recs[:120], recs[120:]
    grid = []
    for desc in ("sift", "orb"):
        base = Experiment("de-md", descriptor=desc, k=4, forest=ForestParams(n_trees=50))
        grid += dictionary_grid(base, [4, 16])
    rows = sweep_dictionary(grid, train, test)
    print(pivot_table(rows))


if __name__ == "__main__":
    main()
