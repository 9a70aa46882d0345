"""Geometric repeated-pattern discovery over (onset, pitch) point sets.

Implements the translation-based family: SIA (maximal translatable
patterns), SIATEC (translational equivalence classes), COSIATEC (greedy
cover by best TEC with removal), SIATECCompress (greedy cover without
removal), SIAR (vector table restricted to r lexicographic successors),
and a compactness trawler, together with compression-ratio and
compactness quality measures.

Internally points are rescaled to integer coordinates (the LCM of the
onset denominators) so the hot loops run on plain int tuples; results are
mapped back to exact rational Points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from motifkit.core import (
    PatternOccurrence,
    PatternRecord,
    Point,
    PointSet,
)


@dataclass(frozen=True, order=True)
class Vector2:
    """A translation: time shift in crotchets, pitch shift in semitones."""

    dt: Fraction
    dp: int

    def is_zero(self) -> bool:
        return self.dt == 0 and self.dp == 0


ZERO = Vector2(Fraction(0), 0)


@dataclass(frozen=True)
class MTP:
    """Maximal translatable pattern: all points mapped into the set by `vector`."""

    vector: Vector2
    points: tuple[Point, ...]

    @property
    def translated(self) -> tuple[Point, ...]:
        """The second occurrence implied by the vector (duration-less shift)."""
        return tuple(
            Point(p.onset + self.vector.dt, p.pitch + self.vector.dp, p.duration)
            for p in self.points
        )


@dataclass(frozen=True)
class TEC:
    """A pattern with every vector translating it into the source set."""

    pattern: tuple[Point, ...]
    translators: tuple[Vector2, ...]
    covered: tuple[Point, ...]

    def occurrences(self) -> list[tuple[Point, ...]]:
        return [
            tuple(
                Point(p.onset + u.dt, p.pitch + u.dp, p.duration)
                for p in self.pattern
            )
            for u in self.translators
        ]


@dataclass(frozen=True)
class TecQuality:
    compression_ratio: Fraction
    compactness: Fraction
    coverage: int


# ---------------------------------------------------------------------------
# Integer encoding

_Coord = tuple[int, int]


class _Grid:
    """Integer view of a PointSet: onset * scale is always integral."""

    def __init__(self, ps: PointSet):
        self.scale = math.lcm(*(p.onset.denominator for p in ps.points)) if len(ps) else 1
        self.coords: list[_Coord] = []
        self.by_coord: dict[_Coord, Point] = {}
        for p in ps.points:
            c = (int(p.onset * self.scale), p.pitch)
            self.coords.append(c)
            self.by_coord[c] = p
        self.coord_set = set(self.coords)

    def point(self, c: _Coord) -> Point:
        return self.by_coord[c]

    def points(self, cs) -> tuple[Point, ...]:
        return tuple(self.by_coord[c] for c in sorted(cs))

    def vector(self, v: _Coord) -> Vector2:
        return Vector2(Fraction(v[0], self.scale), v[1])


def _sub(a: _Coord, b: _Coord) -> _Coord:
    return (a[0] - b[0], a[1] - b[1])


def _add(a: _Coord, b: _Coord) -> _Coord:
    return (a[0] + b[0], a[1] + b[1])


# ---------------------------------------------------------------------------
# SIA / SIAR


def _mtp_table(grid: _Grid, pairs) -> dict[_Coord, list[_Coord]]:
    """Group origin coordinates by difference vector."""
    table: dict[_Coord, list[_Coord]] = {}
    for a, b in pairs:
        table.setdefault(_sub(b, a), []).append(a)
    return table


def sia(ps: PointSet) -> list[MTP]:
    """All maximal translatable patterns, one per positive inter-point vector.

    For each distinct vector v > (0, 0) (lexicographically) the pattern is
    {p : p + v in the set}.  Returns MTPs sorted by vector.  Fewer than two
    points yield an empty list.
    """
    if len(ps) < 2:
        return []
    grid = _Grid(ps)
    cs = grid.coords
    pairs = ((cs[i], cs[j]) for i in range(len(cs)) for j in range(i + 1, len(cs)))
    table = _mtp_table(grid, pairs)
    return [
        MTP(grid.vector(v), grid.points(origins))
        for v, origins in sorted(table.items())
    ]


def siar(ps: PointSet, r: int) -> list[MTP]:
    """SIA restricted to vectors between each point and its next `r` successors.

    Every emitted MTP is still the full pattern over the whole set, so the
    result is a subset of :func:`sia`'s (vector, points) mapping; with
    r >= len(ps) - 1 the two coincide.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if len(ps) < 2:
        return []
    grid = _Grid(ps)
    cs = grid.coords
    coord_set = grid.coord_set
    vectors = {
        _sub(cs[j], cs[i])
        for i in range(len(cs))
        for j in range(i + 1, min(i + r + 1, len(cs)))
    }
    out = []
    for v in sorted(vectors):
        origins = [c for c in cs if _add(c, v) in coord_set]
        out.append(MTP(grid.vector(v), grid.points(origins)))
    return out


# ---------------------------------------------------------------------------
# SIATEC


def _translators_of(shape: Sequence[_Coord], grid: _Grid) -> list[_Coord]:
    """All u with shape + u inside the set; shape[0] is at the origin."""
    coord_set = grid.coord_set
    rest = shape[1:]
    out = []
    for d in grid.coords:
        u = d  # candidate translator mapping shape[0] -> d
        for q in rest:
            if (q[0] + u[0], q[1] + u[1]) not in coord_set:
                break
        else:
            out.append(u)
    return out


def siatec(ps: PointSet) -> list[TEC]:
    """Translational equivalence classes of SIA's patterns.

    Translationally equivalent MTPs are merged before the translator
    search; the representative pattern is the lexicographically least
    occurrence.  Each TEC's translators include the zero vector.  Output
    is sorted by (pattern, translators) for determinism.
    """
    if len(ps) < 2:
        return []
    grid = _Grid(ps)
    cs = grid.coords
    pairs = ((cs[i], cs[j]) for i in range(len(cs)) for j in range(i + 1, len(cs)))
    table = _mtp_table(grid, pairs)

    shapes = set()
    for origins in table.values():
        base = min(origins)
        shapes.add(tuple(sorted(_sub(c, base) for c in origins)))

    tecs = []
    for shape in shapes:
        translators = _translators_of(shape, grid)
        least = min(translators)
        pattern = [_add(q, least) for q in shape]
        rel = sorted(_sub(u, least) for u in translators)
        covered = {_add(q, u) for q in pattern for u in rel}
        tecs.append(
            TEC(
                pattern=grid.points(pattern),
                translators=tuple(grid.vector(u) for u in rel),
                covered=grid.points(covered),
            )
        )
    tecs.sort(key=lambda t: (t.pattern, t.translators))
    return tecs


# ---------------------------------------------------------------------------
# Quality measures


def compactness(
    pattern: Sequence[Point], ps: PointSet, mode: str = "temporal"
) -> Fraction:
    """Pattern size over the number of set points inside its window.

    ``temporal`` counts set points whose onset lies in the pattern's onset
    range; ``bbox`` additionally restricts to the pattern's pitch range.
    """
    pts = tuple(pattern)
    if not pts:
        raise ValueError("pattern must be nonempty")
    coords = ps.coords()
    for p in pts:
        if p.coord not in coords:
            raise ValueError(f"pattern point {p.coord} not in the point set")
    lo = min(p.onset for p in pts)
    hi = max(p.onset for p in pts)
    if mode == "temporal":
        inside = sum(1 for d in ps.points if lo <= d.onset <= hi)
    elif mode == "bbox":
        plo = min(p.pitch for p in pts)
        phi = max(p.pitch for p in pts)
        inside = sum(
            1 for d in ps.points if lo <= d.onset <= hi and plo <= d.pitch <= phi
        )
    else:
        raise ValueError(f"unknown compactness mode {mode!r}")
    return Fraction(len(pts), inside)


def tec_quality(tec: TEC, ps: PointSet, mode: str = "temporal") -> TecQuality:
    ratio = Fraction(len(tec.covered), len(tec.pattern) + len(tec.translators) - 1)
    return TecQuality(
        compression_ratio=ratio,
        compactness=compactness(tec.pattern, ps, mode=mode),
        coverage=len(tec.covered),
    )


_QUALITY_KEYS: dict[str, Callable[[TecQuality, TEC], object]] = {
    "cr": lambda q, t: q.compression_ratio,
    "comp": lambda q, t: q.compactness,
    "cov": lambda q, t: q.coverage,
    "size": lambda q, t: len(t.pattern),
}

DEFAULT_ORDER = ("cr", "comp", "cov", "size")


def _quality_key(name: str) -> Callable[[TecQuality, TEC], object]:
    if name.startswith("comp>="):
        threshold = Fraction(name[len("comp>=") :])
        return lambda q, t: int(q.compactness >= threshold)
    try:
        return _QUALITY_KEYS[name]
    except KeyError:
        raise ValueError(f"unknown quality key {name!r}") from None


def _rank_key(order: Sequence[str]):
    keys = [_quality_key(k) for k in order]
    keys += [_QUALITY_KEYS[k] for k in DEFAULT_ORDER if k not in order]

    def key(item: tuple[TEC, TecQuality]):
        tec, q = item
        # descending quality, ascending pattern for full determinism
        return tuple(-k(q, tec) for k in keys) + (tec.pattern,)

    return key


def _residue_tec(points: Sequence[Point]) -> TEC:
    pts = tuple(sorted(points))
    return TEC(pattern=pts, translators=(ZERO,), covered=pts)


def cosiatec(ps: PointSet, tie_break: Sequence[str] = DEFAULT_ORDER) -> list[TEC]:
    """Cover the set by repeatedly taking the best TEC and removing its points.

    The best TEC maximizes the `tie_break` quality ordering (defaults to
    compression ratio, compactness, coverage, pattern size).  Once no TEC
    compresses (best ratio <= 1) or fewer than two points remain, the
    residue is emitted as a single zero-translator TEC.  Covers partition
    the input exactly.
    """
    key = _rank_key(tie_break)
    remaining = ps
    out = []
    while len(remaining):
        if len(remaining) < 2:
            out.append(_residue_tec(remaining.points))
            break
        ranked = sorted(
            ((t, tec_quality(t, remaining)) for t in siatec(remaining)), key=key
        )
        best, best_q = ranked[0]
        if best_q.compression_ratio <= 1:
            out.append(_residue_tec(remaining.points))
            break
        out.append(best)
        gone = set(best.covered)
        remaining = PointSet.build(
            [p for p in remaining.points if p not in gone],
            title=remaining.title,
        )
    return out


def siatec_compress(ps: PointSet, sort_key: str = "cr") -> list[TEC]:
    """Single SIATEC pass, then greedy selection of TECs that add coverage.

    TECs are ranked by `sort_key` (``cr``, ``comp`` or ``cov``; ties fall
    back to the full quality ordering) and accepted whenever they cover at
    least one not-yet-covered point.  Any uncovered residue is appended as
    a final zero-translator TEC.  Covers may overlap, but their union is
    the whole input.
    """
    if sort_key not in ("cr", "comp", "cov"):
        raise ValueError(f"sort_key must be one of cr|comp|cov, got {sort_key!r}")
    if len(ps) == 0:
        return []
    if len(ps) < 2:
        return [_residue_tec(ps.points)]
    key = _rank_key((sort_key,))
    ranked = sorted(((t, tec_quality(t, ps)) for t in siatec(ps)), key=key)
    covered: set[Point] = set()
    out = []
    for tec, _ in ranked:
        new = set(tec.covered) - covered
        if new:
            out.append(tec)
            covered |= new
    rest = [p for p in ps.points if p not in covered]
    if rest:
        out.append(_residue_tec(rest))
    return out


# ---------------------------------------------------------------------------
# Compactness trawler / SIARCT


def compactness_trawl(
    pattern: Sequence[Point],
    ps: PointSet,
    a: Fraction,
    b: int,
    mode: str = "temporal",
) -> list[tuple[Point, ...]]:
    """Split a pattern into maximal left-to-right segments of compactness >= a.

    The scan extends the current segment while its compactness stays at or
    above `a`; a violating point closes the segment and starts a new one.
    Only segments with at least `b` points are kept.
    """
    if not 0 < a <= 1:
        raise ValueError("compactness threshold must be in (0, 1]")
    if b < 1:
        raise ValueError("minimum segment size must be >= 1")
    pts = sorted(pattern)
    out = []

    def close(segment: list[Point]):
        # a freshly seeded singleton can still sit below the threshold
        # when other set points share its onset
        if len(segment) >= b and compactness(segment, ps, mode=mode) >= a:
            out.append(tuple(segment))

    segment: list[Point] = []
    for p in pts:
        candidate = segment + [p]
        if not segment or compactness(candidate, ps, mode=mode) >= a:
            segment = candidate
        else:
            close(segment)
            segment = [p]
    if segment:
        close(segment)
    return out


def siarct(
    ps: PointSet, a: Fraction, b: int, r: int | None = None
) -> list[tuple[Vector2, tuple[Point, ...]]]:
    """SIA(R) patterns filtered through the compactness trawler.

    Each MTP of the (optionally r-restricted) vector table is trawled;
    surviving segments are returned with their source vector, deduplicated
    and sorted.
    """
    mtps = sia(ps) if r is None else siar(ps, r)
    seen = set()
    out = []
    for mtp in mtps:
        for segment in compactness_trawl(mtp.points, ps, a, b):
            key = (mtp.vector, segment)
            if key not in seen:
                seen.add(key)
                out.append(key)
    out.sort()
    return out


# ---------------------------------------------------------------------------
# Record serialization and the algorithm-spec grammar


def mtps_to_records(mtps: Sequence[MTP], algorithm_id: str) -> list[PatternRecord]:
    """Each MTP becomes a record with the pattern and its vector image."""
    return [
        PatternRecord(
            algorithm_id,
            f"mtp-{i:04d}",
            (
                PatternOccurrence(m.points),
                PatternOccurrence(m.translated),
            ),
        )
        for i, m in enumerate(mtps)
    ]


def tecs_to_records(tecs: Sequence[TEC], algorithm_id: str) -> list[PatternRecord]:
    return [
        PatternRecord(
            algorithm_id,
            f"tec-{i:04d}",
            tuple(PatternOccurrence(occ) for occ in t.occurrences()),
        )
        for i, t in enumerate(tecs)
    ]


def run_algorithm(spec: str, ps: PointSet) -> list[PatternRecord]:
    """Run an algorithm given its id string.

    Grammar: ``sia`` | ``siatec`` | ``cosiatec`` | ``siatec-compress:<key>``
    | ``siar:<r>`` | ``siarct:<a>,<b>``.
    """
    name, _, arg = spec.partition(":")
    try:
        if name == "sia":
            return mtps_to_records(sia(ps), spec)
        if name == "siar":
            return mtps_to_records(siar(ps, int(arg)), spec)
        if name == "siatec":
            return tecs_to_records(siatec(ps), spec)
        if name == "cosiatec":
            return tecs_to_records(cosiatec(ps), spec)
        if name == "siatec-compress":
            return tecs_to_records(siatec_compress(ps, arg or "cr"), spec)
        if name == "siarct":
            a_s, _, b_s = arg.partition(",")
            segments = siarct(ps, Fraction(a_s), int(b_s))
            return [
                PatternRecord(
                    spec,
                    f"seg-{i:04d}",
                    (
                        PatternOccurrence(seg),
                        PatternOccurrence(
                            tuple(
                                Point(p.onset + v.dt, p.pitch + v.dp, p.duration)
                                for p in seg
                            )
                        ),
                    ),
                )
                for i, (v, seg) in enumerate(segments)
            ]
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"invalid algorithm spec {spec!r}: {exc}") from exc
    raise ValueError(f"unknown algorithm {spec!r}")
