"""Labeled dataset assembly and train/validation/test splitting.

All randomness flows through numpy's PCG64 generator seeded from an
explicit integer, so splits reproduce bit-for-bit across runs and
platforms (test vectors live in the test suite).  The merged protocol
splits stratified at the sample level; the author-disjoint protocol
assigns whole authors greedily (largest author first, to the split
furthest below its target) so no author spans two splits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from numpy.random import Generator, PCG64, SeedSequence

from .errors import DataError
from .ingest import Sample
from .periodization import EraScheme, assign_label

SPLIT_NAMES = ("train", "val", "test")


@dataclass
class LabeledDataset:
    samples: list[Sample]
    scheme: EraScheme
    class_counts: dict[int, int]
    # bookkeeping for years that were clamped into edge bins or excluded
    clamped_low: int = 0
    clamped_high: int = 0
    excluded: int = 0


@dataclass
class SplitSpec:
    test_frac: float = 0.15
    val_frac_of_train: float = 0.15
    protocol: str = "author_disjoint"  # "author_disjoint" | "merged"
    seed: int = 0

    def __post_init__(self):
        for name, frac in (("test_frac", self.test_frac), ("val_frac_of_train", self.val_frac_of_train)):
            if not 0 < frac < 1:
                raise DataError(f"{name} must be strictly between 0 and 1")
        if self.protocol not in ("author_disjoint", "merged"):
            raise DataError(f"unknown split protocol {self.protocol!r}")


@dataclass
class Split:
    train: list[Sample]
    val: list[Sample]
    test: list[Sample]

    def as_dict(self) -> dict[str, list[Sample]]:
        return {"train": self.train, "val": self.val, "test": self.test}


def _count_classes(samples: list[Sample]) -> dict[int, int]:
    counts: dict[int, int] = {}
    for s in samples:
        counts[s.label] = counts.get(s.label, 0) + 1
    return counts


def label_dataset(samples: list[Sample], scheme: EraScheme) -> LabeledDataset:
    """Assign era labels by year and apply scheme-specific exclusions.

    Years inside an interior gap of the scheme are excluded (e.g. the
    five-era poetry scheme omits the span of the excluded era).  Under
    ``openiti5`` the years below the first bin are excluded rather than
    clamped, mirroring how pre-Islamic texts are discarded only in that
    setup.  Edge clamps and exclusions are counted on the result.
    """
    start, end = scheme.span()
    exclude_below_start = scheme.name == "openiti5"
    kept: list[Sample] = []
    clamped_low = clamped_high = excluded = 0
    for s in samples:
        year = s.year_hijri
        if year < start:
            if exclude_below_start:
                excluded += 1
                continue
            clamped_low += 1
        elif year >= end:
            clamped_high += 1
        label = assign_label(year, scheme)
        if label is None:
            excluded += 1
            continue
        kept.append(
            Sample(s.sample_id, s.author_id, s.tokens, s.year_hijri, label=label)
        )
    return LabeledDataset(
        kept, scheme, _count_classes(kept), clamped_low, clamped_high, excluded
    )


def balance(ds: LabeledDataset, seed: int = 0) -> LabeledDataset:
    """Downsample every class to the smallest class count, uniformly at random.

    Surviving samples keep their original order.  Deterministic for a
    fixed seed.
    """
    if not ds.samples:
        return LabeledDataset([], ds.scheme, {})
    for cls in range(ds.scheme.n_classes):
        if ds.class_counts.get(cls, 0) == 0:
            raise DataError(
                f"cannot balance: class {cls} ({ds.scheme.bins[cls].label!r}) has no samples"
            )
    target = min(ds.class_counts.values())
    rng = Generator(PCG64(SeedSequence([seed, 0x62616C])))
    keep_ids: set[str] = set()
    for cls in sorted(ds.class_counts):
        members = [s.sample_id for s in ds.samples if s.label == cls]
        if len(members) <= target:
            keep_ids.update(members)
        else:
            chosen = rng.choice(len(members), size=target, replace=False)
            keep_ids.update(members[i] for i in sorted(chosen.tolist()))
    kept = [s for s in ds.samples if s.sample_id in keep_ids]
    return LabeledDataset(kept, ds.scheme, _count_classes(kept), ds.clamped_low, ds.clamped_high, ds.excluded)


def _largest_remainder(class_sizes: dict[int, int], total_take: int) -> dict[int, int]:
    """Apportion ``total_take`` across classes proportionally to size."""
    pool = sum(class_sizes.values())
    if pool == 0 or total_take <= 0:
        return {cls: 0 for cls in class_sizes}
    shares = {cls: n * total_take / pool for cls, n in class_sizes.items()}
    alloc = {cls: int(shares[cls]) for cls in class_sizes}
    leftover = total_take - sum(alloc.values())
    by_fraction = sorted(class_sizes, key=lambda c: (-(shares[c] - alloc[c]), c))
    for cls in by_fraction[:leftover]:
        alloc[cls] += 1
    return {cls: min(alloc[cls], class_sizes[cls]) for cls in class_sizes}


def _stratified_split(samples: list[Sample], spec: SplitSpec) -> Split:
    """Sample-level split hitting dataset-level totals exactly.

    Split totals come from the fractions (test first, then validation
    out of the remainder); per-class quotas are apportioned by largest
    remainder so every class's share deviates from the global proportion
    by at most one sample.
    """
    rng = Generator(PCG64(SeedSequence([spec.seed, 0x6D72670A])))
    by_class: dict[int, list[Sample]] = {}
    for s in samples:
        by_class.setdefault(s.label, []).append(s)
    total = len(samples)
    n_test = int(round(spec.test_frac * total))
    n_val = int(round(spec.val_frac_of_train * (total - n_test)))
    class_sizes = {cls: len(v) for cls, v in by_class.items()}
    test_alloc = _largest_remainder(class_sizes, n_test)
    remaining = {cls: class_sizes[cls] - test_alloc[cls] for cls in class_sizes}
    val_alloc = _largest_remainder(remaining, n_val)

    parts: dict[str, list[Sample]] = {name: [] for name in SPLIT_NAMES}
    for cls in sorted(by_class):
        members = by_class[cls]
        order = rng.permutation(len(members)).tolist()
        cut1 = test_alloc[cls]
        cut2 = cut1 + val_alloc[cls]
        for rank, idx in enumerate(order):
            if rank < cut1:
                parts["test"].append(members[idx])
            elif rank < cut2:
                parts["val"].append(members[idx])
            else:
                parts["train"].append(members[idx])
    return Split(parts["train"], parts["val"], parts["test"])


def _author_disjoint_split(samples: list[Sample], spec: SplitSpec) -> Split:
    by_author: dict[str, list[Sample]] = {}
    for s in samples:
        by_author.setdefault(s.author_id, []).append(s)
    if len(by_author) < 3:
        raise DataError(
            f"author-disjoint split needs at least 3 authors, got {len(by_author)}"
        )
    total = len(samples)
    largest = max(len(v) for v in by_author.values())
    if largest > (1 - spec.test_frac) * total:
        raise DataError(
            "author-disjoint split infeasible: one author holds "
            f"{largest}/{total} samples (> {1 - spec.test_frac:.0%})"
        )
    fracs = {
        "test": spec.test_frac,
        "val": (1 - spec.test_frac) * spec.val_frac_of_train,
    }
    fracs["train"] = 1.0 - fracs["test"] - fracs["val"]
    class_totals = _count_classes(samples)
    # Per-split, per-class and global sample targets.  Scoring a split by
    # class deficit + global deficit keeps every class present in every
    # split (given enough authors per class) while tracking the fractions.
    targets = {
        name: {cls: fracs[name] * cnt for cls, cnt in class_totals.items()}
        for name in SPLIT_NAMES
    }
    global_targets = {name: fracs[name] * total for name in SPLIT_NAMES}

    # Shuffle first so equal-sized authors land in seed-dependent order,
    # then place each author (largest first) into the split hungriest
    # for that author's class mix.
    rng = Generator(PCG64(SeedSequence([spec.seed, 0x61757468])))
    authors = sorted(by_author)
    authors = [authors[i] for i in rng.permutation(len(authors)).tolist()]
    authors.sort(key=lambda a: -len(by_author[a]))

    filled = {name: {cls: 0 for cls in class_totals} for name in SPLIT_NAMES}
    global_filled = {name: 0 for name in SPLIT_NAMES}
    assignment: dict[str, str] = {}
    for author in authors:
        author_classes = _count_classes(by_author[author])
        size = len(by_author[author])
        scores = {}
        for name in SPLIT_NAMES:
            class_need = sum(
                cnt * (targets[name][cls] - filled[name][cls])
                for cls, cnt in author_classes.items()
            )
            global_need = size * (global_targets[name] - global_filled[name])
            scores[name] = class_need + global_need
        dest = max(SPLIT_NAMES, key=lambda name: (scores[name], fracs[name]))
        assignment[author] = dest
        for cls, cnt in author_classes.items():
            filled[dest][cls] += cnt
        global_filled[dest] += size

    parts: dict[str, list[Sample]] = {name: [] for name in SPLIT_NAMES}
    for s in samples:
        parts[assignment[s.author_id]].append(s)
    return Split(parts["train"], parts["val"], parts["test"])


def split(ds: LabeledDataset, spec: SplitSpec) -> Split:
    """Partition a labeled dataset per the split protocol.

    merged: class balance first, then a stratified sample-level split.
    author_disjoint: assign authors to splits first, then rebalance each
    split independently (pre-balancing cannot survive whole-author
    moves).
    """
    if spec.protocol == "merged":
        balanced = balance(ds, seed=spec.seed)
        return _stratified_split(balanced.samples, spec)
    raw = _author_disjoint_split(ds.samples, spec)
    rebalanced = []
    for part_name, part in zip(SPLIT_NAMES, (raw.train, raw.val, raw.test)):
        part_ds = LabeledDataset(part, ds.scheme, _count_classes(part))
        try:
            rebalanced.append(balance(part_ds, seed=spec.seed).samples)
        except DataError as exc:
            raise DataError(f"{part_name} split: {exc}") from exc
    return Split(*rebalanced)


@dataclass
class SplitManifest:
    """Audit record: sample_id -> (split, label)."""

    rows: list[tuple[str, str, int]] = field(default_factory=list)

    @classmethod
    def from_split(cls, sp: Split) -> "SplitManifest":
        rows = []
        for name, part in sp.as_dict().items():
            for s in part:
                rows.append((s.sample_id, name, s.label))
        return cls(rows)

    def write(self, path: str | Path) -> None:
        lines = [f"{sid}\t{name}\t{label}" for sid, name, label in self.rows]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "SplitManifest":
        rows = []
        for line in Path(path).read_text("utf-8").splitlines():
            if not line:
                continue
            sid, name, label = line.split("\t")
            rows.append((sid, name, int(label)))
        return cls(rows)
