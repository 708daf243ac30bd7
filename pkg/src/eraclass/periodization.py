"""Era schemes: ordered Hijri-year intervals mapped to class labels.

All bins are half-open ``[start_ah, end_ah)`` so that butted eras (one
era ending exactly where the next begins) map every year to exactly one
bin.  Years before the first bin clamp to the first bin and years at or
beyond the last end clamp to the last bin; years falling into an
interior gap of a non-contiguous scheme have no bin (``assign_label``
returns None and dataset assembly excludes them).
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError, DataError

# Upper bound standing in for "till date"; covers both corpora.
MODERN_END_AH = 1450
PRE_ISLAMIC_START_AH = -150


@dataclass(frozen=True)
class EraBin:
    label: str
    start_ah: int
    end_ah: int


@dataclass(frozen=True)
class EraScheme:
    """An ordered, pairwise-disjoint set of labeled year intervals."""

    name: str
    bins: tuple[EraBin, ...]

    def __post_init__(self):
        if not self.bins:
            raise ConfigError(f"scheme {self.name!r} has no bins")
        for b in self.bins:
            if b.start_ah >= b.end_ah:
                raise ConfigError(f"scheme {self.name!r}: bin {b.label!r} has start >= end")
        starts = [b.start_ah for b in self.bins]
        if starts != sorted(starts):
            raise ConfigError(f"scheme {self.name!r}: bins not sorted by start year")
        for prev, cur in zip(self.bins, self.bins[1:]):
            if cur.start_ah < prev.end_ah:
                raise ConfigError(
                    f"scheme {self.name!r}: bins {prev.label!r} and {cur.label!r} overlap"
                )

    @property
    def labels(self) -> list[str]:
        return [b.label for b in self.bins]

    @property
    def n_classes(self) -> int:
        return len(self.bins)

    @property
    def has_gaps(self) -> bool:
        return any(cur.start_ah > prev.end_ah for prev, cur in zip(self.bins, self.bins[1:]))

    def span(self) -> tuple[int, int]:
        return self.bins[0].start_ah, self.bins[-1].end_ah

    def midpoint_year(self, label: str) -> int:
        """Representative year for an era given only its name."""
        for b in self.bins:
            if b.label == label:
                return (b.start_ah + b.end_ah) // 2
        raise DataError(f"scheme {self.name!r} has no era named {label!r}")


def assign_label(year_ah: int, scheme: EraScheme) -> int | None:
    """Index of the bin whose ``[start, end)`` interval contains the year.

    Years below the first bin clamp to bin 0 and years at/after the last
    bin's end clamp to the last bin.  For schemes with interior gaps a
    year inside a gap belongs to no bin and None is returned; callers
    that need counts of clamped/excluded years compare the year against
    ``scheme.span()`` themselves.
    """
    bins = scheme.bins
    if year_ah < bins[0].start_ah:
        return 0
    if year_ah >= bins[-1].end_ah:
        return len(bins) - 1
    i = bisect_right([b.start_ah for b in bins], year_ah) - 1
    if year_ah < bins[i].end_ah:
        return i
    return None  # interior gap


def custom_bins(width_years: int, range_start: int, range_end: int) -> EraScheme:
    """Consecutive half-open bins of fixed width; the last bin truncates.

    ``width=300`` over ``[0, 1500)`` gives five classes, ``width=200``
    over ``[0, 1600)`` eight, and ``width=100`` over ``[0, 1500)``
    fifteen.
    """
    if width_years <= 0:
        raise ConfigError("bin width must be positive")
    if range_end <= range_start:
        raise ConfigError("range_end must exceed range_start")
    bins = []
    start = range_start
    while start < range_end:
        end = min(start + width_years, range_end)
        bins.append(EraBin(f"{start}-{end}", start, end))
        start = end
    return EraScheme(name=f"custom{width_years}", bins=tuple(bins))


def merge_adjacent(scheme: EraScheme, groups: list[list[int]]) -> EraScheme:
    """Coarsen a scheme by uniting consecutive runs of bins.

    ``groups`` must partition ``range(n_classes)`` into consecutive
    runs, in order.  Each merged bin spans from its first member's start
    to its last member's end (absorbing any interior gap).
    """
    flat = [i for g in groups for i in g]
    if flat != list(range(scheme.n_classes)):
        raise ConfigError(
            f"groups must partition 0..{scheme.n_classes - 1} into consecutive runs, got {groups}"
        )
    for g in groups:
        if g != list(range(g[0], g[0] + len(g))):
            raise ConfigError(f"group {g} is not a consecutive run")
    bins = []
    for g in groups:
        members = [scheme.bins[i] for i in g]
        label = "+".join(m.label for m in members)
        bins.append(EraBin(label, members[0].start_ah, members[-1].end_ah))
    return EraScheme(name=f"{scheme.name}_merged", bins=tuple(bins))


def group_index_map(groups: list[list[int]]) -> dict[int, int]:
    """Original bin index -> merged group index."""
    return {i: gi for gi, g in enumerate(groups) for i in g}


def load_scheme_file(path: str | Path, name: str | None = None) -> EraScheme:
    """Read a ``label<TAB>start_ah<TAB>end_ah`` scheme file (sorted rows)."""
    p = Path(path)
    if not p.exists():
        raise DataError(f"scheme file not found: {p}")
    bins = []
    for lineno, line in enumerate(p.read_text("utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"{p}:{lineno}: expected 'label<TAB>start<TAB>end'")
        try:
            bins.append(EraBin(parts[0], int(parts[1]), int(parts[2])))
        except ValueError as exc:
            raise DataError(f"{p}:{lineno}: non-integer year: {exc}") from exc
    return EraScheme(name=name or p.stem, bins=tuple(bins))


def _apcd12_bins() -> tuple[EraBin, ...]:
    text = resources.files("eraclass.data").joinpath("apcd_eras.tsv").read_text("utf-8")
    bins = []
    for line in text.splitlines():
        if not line.strip():
            continue
        label, start, end = line.split("\t")
        bins.append(EraBin(label, int(start), int(end)))
    return tuple(bins)


def _ghoniem_bins(labels: set[str] | None = None) -> tuple[EraBin, ...]:
    all_bins = (
        EraBin("Pre-Islamic", PRE_ISLAMIC_START_AH, 1),
        EraBin("Islamic", 1, 132),
        EraBin("Abbasid", 132, 334),
        EraBin("Aldoul wa al-emarat", 334, 923),
        EraBin("Ottoman", 923, 1335),
        EraBin("Modern", 1335, MODERN_END_AH),
    )
    if labels is None:
        return all_bins
    return tuple(b for b in all_bins if b.label in labels)


BUILTIN_SCHEME_IDS = (
    "ghoniem6",
    "openiti5",
    "belinkov3",
    "binary_openiti",
    "apcd5",
    "apcd12",
    "apcd11",
)


def builtin_scheme(scheme_id: str) -> EraScheme:
    """Construct one of the built-in era schemes by id.

    ``ghoniem6``: the six literature eras (Pre-Islamic through Modern).
    ``openiti5``: the five-era prose setup (Islamic 50-175 ... Modern
    1350-1450; pre-Islamic handled by dataset filtering, not here).
    ``belinkov3``: Early/Middle/Late with boundaries standardized to
    300 and 1300 AH.  ``binary_openiti``: Classical vs Modern at 1350.
    ``apcd5``: the five-era poetry setup (Aldoul wa al-emarat excluded,
    leaving a documented gap).  ``apcd12``/``apcd11``: the poetry
    corpus's era names with conventional year spans from the bundled,
    editable data file; ``apcd11`` drops the Islamic era.
    """
    if scheme_id == "ghoniem6":
        return EraScheme("ghoniem6", _ghoniem_bins())
    if scheme_id == "openiti5":
        return EraScheme(
            "openiti5",
            (
                EraBin("Islamic", 50, 175),
                EraBin("Abbasid", 175, 400),
                EraBin("Aldoul wa al-emarat", 400, 950),
                EraBin("Ottoman", 950, 1350),
                EraBin("Modern", 1350, MODERN_END_AH),
            ),
        )
    if scheme_id == "belinkov3":
        return EraScheme(
            "belinkov3",
            (
                EraBin("Early", 1, 300),
                EraBin("Middle", 300, 1300),
                EraBin("Late", 1300, MODERN_END_AH),
            ),
        )
    if scheme_id == "binary_openiti":
        return EraScheme(
            "binary_openiti",
            (
                EraBin("Classical", PRE_ISLAMIC_START_AH, 1350),
                EraBin("Modern", 1350, MODERN_END_AH),
            ),
        )
    if scheme_id == "apcd5":
        labels = {"Pre-Islamic", "Islamic", "Abbasid", "Ottoman", "Modern"}
        return EraScheme("apcd5", _ghoniem_bins(labels))
    if scheme_id == "apcd12":
        return EraScheme("apcd12", _apcd12_bins())
    if scheme_id == "apcd11":
        bins = tuple(b for b in _apcd12_bins() if b.label != "Islamic")
        return EraScheme("apcd11", bins)
    raise ConfigError(f"unknown scheme id {scheme_id!r}; valid ids: {', '.join(BUILTIN_SCHEME_IDS)}")


def resolve_scheme(spec: str) -> EraScheme:
    """Builtin scheme id, or a path to a scheme file."""
    if spec in BUILTIN_SCHEME_IDS:
        return builtin_scheme(spec)
    if Path(spec).exists():
        return load_scheme_file(spec)
    raise ConfigError(f"{spec!r} is neither a builtin scheme id nor an existing scheme file")
