"""Benchmark harness: iteration counts of projection methods over a
categorized random corpus of subspace pairs.

Pairs are binned by Friedrichs angle (primary bins W1, W2, ...) and by the
normalized gap (theta_p - theta_F)/(pi/2 - theta_F) (secondary bins Z1..Zm).
Each cell gets a fixed number of seeded random pairs, each pair a fixed
number of seeded starting points on a sphere, and every method runs on the
identical instances until the monitored point is within eps of the
intersection or max_iter is hit (the instance then counts as unsolved, with
the count clamped at max_iter).

Everything is a pure function of (grid, methods, master_seed): rerunning
with the same inputs reproduces the records and all exported files byte for
byte.
"""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass, asdict

import numpy as np

from .methods import MethodSpec, DivergenceError, iterate, parse_method
from .subspaces import PairGeometry, canonical_pair, pair_geometry

DEFAULT_PRIMARY_BINS = ((0.0, 0.05), (0.05, 0.1), (0.1, 0.5), (0.5, 1.0))

#: floor keeping sampled Friedrichs angles strictly positive
MIN_ANGLE = 1e-6
#: keep draws this far from bin edges so re-measured angles stay inside
EDGE_MARGIN = 1e-9


@dataclass(frozen=True)
class CategoryGrid:
    """Benchmark configuration: category bins and per-cell instance counts."""

    primary_bins: tuple = DEFAULT_PRIMARY_BINS
    secondary_bins: int = 5
    ambient_dim: int = 30
    pairs_per_cell: int = 3
    starts_per_pair: int = 5
    start_norm: float = 10.0
    eps: float = 0.01
    max_iter: int = 100000

    def __post_init__(self):
        bins = tuple(tuple(float(e) for e in b) for b in self.primary_bins)
        object.__setattr__(self, "primary_bins", bins)
        if not bins:
            raise ValueError("need at least one primary bin")
        for lo, hi in bins:
            if not 0.0 <= lo < hi <= math.pi / 2:
                raise ValueError(f"bad primary bin [{lo}, {hi})")
        for (_, hi), (lo, _) in zip(bins, bins[1:]):
            if lo < hi:
                raise ValueError("primary bins must be disjoint and ascending")
        if self.secondary_bins < 1:
            raise ValueError("need at least one secondary bin")
        if min(self.pairs_per_cell, self.starts_per_pair, self.max_iter) < 1:
            raise ValueError("counts must be at least 1")
        if self.ambient_dim < 2:
            raise ValueError("ambient dimension must be at least 2")
        if not (self.eps > 0 and self.start_norm > 0):
            raise ValueError("eps and start_norm must be positive")

    def primary_label(self, i: int) -> str:
        return f"W{i + 1}"

    def cell_label(self, i: int, j: int) -> str:
        return f"W{i + 1}Z{j + 1}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["primary_bins"] = [list(b) for b in self.primary_bins]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CategoryGrid":
        known = {
            "primary_bins", "secondary_bins", "ambient_dim", "pairs_per_cell",
            "starts_per_pair", "start_norm", "eps", "max_iter",
        }
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown grid config keys: {sorted(unknown)}")
        kwargs = dict(d)
        if "primary_bins" in kwargs:
            kwargs["primary_bins"] = tuple(tuple(b) for b in kwargs["primary_bins"])
        return cls(**kwargs)


def _derive_seed(master_seed: int, *path: int) -> int:
    """Stable per-instance integer seed from the master seed and an index path."""
    ss = np.random.SeedSequence([int(master_seed), *map(int, path)])
    return int(ss.generate_state(1, np.uint64)[0])


def sample_pair(grid: CategoryGrid, cell: tuple, seed: int) -> PairGeometry:
    """Draw one random subspace pair landing in the given (primary, secondary)
    cell.

    Dimensions are drawn uniformly with 3 <= p <= n/2, p <= q <= n - p and
    intersection dimension 1 <= s <= p - 2 (two distinct nonzero angles are
    needed for a strict gap).  The Friedrichs angle is uniform in the
    primary bin, theta_p is placed via a uniform normalized gap inside the
    secondary bin, interior angles are uniform in between.
    """
    i, j = cell
    lo, hi = grid.primary_bins[i]
    n = grid.ambient_dim
    if n < 6 or n // 2 < 3:
        raise ValueError(
            f"cell {grid.cell_label(i, j)}: ambient dimension {n} cannot host "
            "p >= 3 with q >= p and p + q <= n"
        )
    rng = np.random.default_rng(seed)

    p = int(rng.integers(3, n // 2 + 1))
    q = int(rng.integers(p, n - p + 1))
    s = int(rng.integers(1, p - 1))

    lo_eff = max(lo, MIN_ANGLE)
    theta_f = float(np.clip(rng.uniform(lo_eff, hi), lo_eff + EDGE_MARGIN, hi - EDGE_MARGIN))
    g_lo = j / grid.secondary_bins
    g_hi = (j + 1) / grid.secondary_bins
    gap = float(
        np.clip(
            rng.uniform(g_lo, g_hi),
            max(g_lo, MIN_ANGLE) + EDGE_MARGIN,
            g_hi - EDGE_MARGIN,
        )
    )
    theta_p = theta_f + gap * (math.pi / 2 - theta_f)
    interior = np.sort(rng.uniform(theta_f, theta_p, p - s - 2))
    angles = np.concatenate([np.zeros(s), [theta_f], interior, [theta_p]])

    u, v = canonical_pair(n, angles, q, seed=rng)
    geom = pair_geometry(u, v)

    measured_gap = (geom.theta_p - geom.theta_F) / (math.pi / 2 - geom.theta_F)
    if not (lo <= geom.theta_F < hi and g_lo <= measured_gap < g_hi and geom.s == s):
        raise RuntimeError(
            f"cell {grid.cell_label(i, j)}: re-measured pair fell outside its "
            f"cell (theta_F={geom.theta_F}, gap={measured_gap}, s={geom.s})"
        )
    return geom


def start_vector(ambient_dim: int, seed: int, norm: float = 10.0) -> np.ndarray:
    """The seeded random starting point used for one benchmark instance.

    Gaussian direction scaled to ``norm``.  Records store the seed, so any
    instance can be replayed exactly: rebuild the pair with ``sample_pair``
    and the start with this function.
    """
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal(ambient_dim)
    x0 *= norm / np.linalg.norm(x0)
    return x0


@dataclass(frozen=True)
class InstanceRecord:
    """One (pair, start, method) benchmark outcome."""

    cell: str
    primary_index: int
    pair_index: int
    start_index: int
    pair_seed: int
    start_seed: int
    theta_F: float
    theta_p: float
    method: str
    iterations: int
    solved: bool


@dataclass(frozen=True)
class BenchmarkTable:
    """All instance outcomes of one grid run plus the aggregation logic."""

    grid: CategoryGrid
    methods: tuple
    master_seed: int
    records: tuple

    def counts(self, primary_index: int, method: str) -> list:
        """Sorted iteration counts of one (primary bin, method) group."""
        return sorted(
            r.iterations
            for r in self.records
            if r.primary_index == primary_index and r.method == method
        )

    def stats(self, primary_index: int, method: str) -> dict:
        counts = self.counts(primary_index, method)
        unsolved = sum(
            1
            for r in self.records
            if r.primary_index == primary_index
            and r.method == method
            and not r.solved
        )
        return {
            "median": statistics.median(counts) if counts else math.nan,
            "mean": statistics.fmean(counts) if counts else math.nan,
            "std": statistics.stdev(counts) if len(counts) > 1 else 0.0,
            "unsolved": unsolved,
            "instances": len(counts),
        }

    # -- exports ------------------------------------------------------------

    def write_summary_csv(self, fh) -> None:
        """Summary table: one row per method and statistic, one column per
        primary bin."""
        n_bins = len(self.grid.primary_bins)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "statistic"] + [self.grid.primary_label(i) for i in range(n_bins)])
        writer.writerow(
            ["", "instances"] + [self.stats(i, self.methods[0])["instances"] for i in range(n_bins)]
        )
        for method in self.methods:
            per_bin = [self.stats(i, method) for i in range(n_bins)]
            for stat in ("median", "mean", "std", "unsolved"):
                writer.writerow([method, stat] + [repr(b[stat]) for b in per_bin])

    def write_records_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["cell", "pair_index", "start_index", "pair_seed", "start_seed",
             "theta_F", "theta_p", "method", "iterations", "solved"]
        )
        for r in self.records:
            writer.writerow(
                [r.cell, r.pair_index, r.start_index, r.pair_seed, r.start_seed,
                 repr(r.theta_F), repr(r.theta_p), r.method, r.iterations,
                 "true" if r.solved else "false"]
            )

    def write_profile_csvs(self, out_dir) -> list:
        """Per-method files of (theta_F, median iterations over the pair's
        starts), sorted by angle: the raw data behind an iterations-vs-angle
        plot."""
        import pathlib

        out_dir = pathlib.Path(out_dir)
        written = []
        for method in self.methods:
            per_pair: dict = {}
            for r in self.records:
                if r.method == method:
                    per_pair.setdefault((r.cell, r.pair_index, r.theta_F), []).append(
                        r.iterations
                    )
            rows = sorted(
                (theta_f, statistics.median(sorted(counts)))
                for (_, _, theta_f), counts in per_pair.items()
            )
            path = out_dir / f"profile_{method.replace(':', '_')}.csv"
            with open(path, "w") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["theta_F", "median_iterations"])
                for theta_f, med in rows:
                    writer.writerow([repr(theta_f), repr(float(med))])
            written.append(path)
        return written


def run_grid(grid: CategoryGrid, methods, master_seed: int) -> BenchmarkTable:
    """Run every method on every seeded (cell, pair, start) instance.

    ``methods`` may hold MethodSpec objects or method strings.  All methods
    see identical pairs and starts.  A method whose iteration diverges or
    hits max_iter records the instance as unsolved at max_iter.
    """
    specs = [m if isinstance(m, MethodSpec) else parse_method(m) for m in methods]
    if not specs:
        raise ValueError("need at least one method")
    records = []
    n = grid.ambient_dim
    for i in range(len(grid.primary_bins)):
        for j in range(grid.secondary_bins):
            for k in range(grid.pairs_per_cell):
                pair_seed = _derive_seed(master_seed, i, j, k)
                geom = sample_pair(grid, (i, j), pair_seed)
                for m in range(grid.starts_per_pair):
                    start_seed = _derive_seed(master_seed, i, j, k, 1000 + m)
                    x0 = start_vector(n, start_seed, norm=grid.start_norm)
                    for spec in specs:
                        try:
                            trace = iterate(
                                spec, geom, x0, eps=grid.eps, max_iter=grid.max_iter
                            )
                            solved = trace.solved
                            count = trace.iterations if solved else grid.max_iter
                        except DivergenceError:
                            solved = False
                            count = grid.max_iter
                        records.append(
                            InstanceRecord(
                                cell=grid.cell_label(i, j),
                                primary_index=i,
                                pair_index=k,
                                start_index=m,
                                pair_seed=pair_seed,
                                start_seed=start_seed,
                                theta_F=geom.theta_F,
                                theta_p=geom.theta_p,
                                method=spec.label,
                                iterations=count,
                                solved=solved,
                            )
                        )
    return BenchmarkTable(
        grid=grid,
        methods=tuple(s.label for s in specs),
        master_seed=int(master_seed),
        records=tuple(records),
    )


# ---------------------------------------------------------------------------
# re-aggregation from a records file


def read_records_csv(fh) -> list:
    """Parse a records.csv back into InstanceRecord rows."""
    records = []
    for row in csv.DictReader(fh):
        cell = row["cell"]
        primary = int(cell.split("Z")[0].lstrip("W")) - 1
        records.append(
            InstanceRecord(
                cell=cell,
                primary_index=primary,
                pair_index=int(row["pair_index"]),
                start_index=int(row["start_index"]),
                pair_seed=int(row["pair_seed"]),
                start_seed=int(row["start_seed"]),
                theta_F=float(row["theta_F"]),
                theta_p=float(row["theta_p"]),
                method=row["method"],
                iterations=int(row["iterations"]),
                solved=row["solved"] == "true",
            )
        )
    return records


def table_from_records(records, grid: CategoryGrid | None = None) -> BenchmarkTable:
    """Reassemble a BenchmarkTable (methods in first-appearance order).

    Statistics recomputed this way agree exactly with the original run;
    seeds are carried in the records themselves.
    """
    methods = []
    for r in records:
        if r.method not in methods:
            methods.append(r.method)
    if grid is None:
        # placeholder bins: aggregation only needs the bin count and labels
        n_primary = 1 + max((r.primary_index for r in records), default=0)
        edges = np.linspace(0.0, math.pi / 2, n_primary + 1)
        grid = CategoryGrid(
            primary_bins=tuple((float(a), float(b)) for a, b in zip(edges, edges[1:]))
        )
    return BenchmarkTable(
        grid=grid, methods=tuple(methods), master_seed=-1, records=tuple(records)
    )
