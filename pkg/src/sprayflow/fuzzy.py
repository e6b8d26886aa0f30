"""Fuzzy gain-correction engine.

Maps a control error and its rate of change onto a quantized universe,
fires a 7x7 rule table, and defuzzifies the result into crisp PID gain
corrections. Inference is Mamdani-style: rule firing strength by min,
consequent clipping by min, aggregation by max, and defuzzification by
discrete centroid on a uniform grid over the universe.

Everything here is immutable after construction; all operations are pure
functions and safe to call concurrently.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

UNIVERSE_MIN = -6.0
UNIVERSE_MAX = 6.0
LABEL_SPACING = 2.0
DEFAULT_GRID_STEP = 0.01


class Label(IntEnum):
    """The seven linguistic labels, negative-big through positive-big."""

    NB = 0
    NM = 1
    NS = 2
    ZO = 3
    PS = 4
    PM = 5
    PB = 6

    @property
    def center(self) -> float:
        """Center of this label's triangular set, in universe units."""
        return UNIVERSE_MIN + LABEL_SPACING * self.value


Triple = tuple[Label, Label, Label]

# Centers of all seven sets, index-aligned with Label.
LABEL_CENTERS = tuple(label.center for label in Label)


def quantize(crisp: float, factor: float) -> float:
    """Scale a physical error (or error rate) into the universe.

    The product crisp * factor is clamped to [-6, 6]; non-finite inputs
    are rejected so NaN cannot enter the inference pipeline.
    """
    if not math.isfinite(crisp):
        raise ValueError(f"crisp input must be finite, got {crisp!r}")
    if not math.isfinite(factor) or factor <= 0:
        raise ValueError(f"quantization factor must be positive and finite, got {factor!r}")
    return min(max(crisp * factor, UNIVERSE_MIN), UNIVERSE_MAX)


def membership(label: Label, x: float) -> float:
    """Degree of x in one triangular set.

    The outermost sets saturate at 1 beyond their centers, so NB and PB
    behave as shoulders if x ever lands outside [-6, 6].
    """
    if label is Label.NB and x <= UNIVERSE_MIN:
        return 1.0
    if label is Label.PB and x >= UNIVERSE_MAX:
        return 1.0
    return max(0.0, 1.0 - abs(x - label.center) / LABEL_SPACING)


def fuzzify(x: float) -> np.ndarray:
    """Membership degrees of a universe value over all seven labels.

    Returns a length-7 vector ordered like Label. The family is a
    partition of unity on [-6, 6], so the degrees sum to 1 and at most
    two of them are nonzero. Values outside the universe are rejected;
    quantize first.
    """
    if not (UNIVERSE_MIN <= x <= UNIVERSE_MAX):
        raise ValueError(f"universe value out of range [-6, 6]: {x!r}")
    return np.array([membership(label, x) for label in Label])


@dataclass(frozen=True)
class RuleTable:
    """49 gain-correction rules indexed by (error label, error-rate label).

    cells[e][ec] holds the (dKp, dKi, dKd) consequent labels. Cells whose
    source transcription is questionable are listed in `suspect`; they
    participate in inference like any other cell but are flagged when the
    table is dumped.
    """

    cells: tuple[tuple[Triple, ...], ...]
    suspect: frozenset[tuple[Label, Label]] = frozenset()

    def __post_init__(self) -> None:
        if len(self.cells) != 7 or any(len(row) != 7 for row in self.cells):
            raise ValueError("rule table must be 7x7")
        for row in self.cells:
            for triple in row:
                if len(triple) != 3 or not all(isinstance(v, Label) for v in triple):
                    raise ValueError(f"invalid rule cell {triple!r}")
        for e, ec in self.suspect:
            if not (isinstance(e, Label) and isinstance(ec, Label)):
                raise ValueError(f"invalid suspect cell key ({e!r}, {ec!r})")

    def lookup(self, e_label: Label, ec_label: Label) -> Triple:
        """The (dKp, dKi, dKd) consequent for one rule; pure lookup."""
        return self.cells[e_label][ec_label]

    def is_suspect(self, e_label: Label, ec_label: Label) -> bool:
        return (e_label, ec_label) in self.suspect

    def dump(self) -> str:
        """Serialize in the override-file format.

        One line per error-rate label (NB through PB), seven comma-separated
        P/I/D triples per line in error-label order, suspect cells marked
        with a trailing '?'.
        """
        lines = []
        for ec in Label:
            entries = []
            for e in Label:
                p, i, d = self.cells[e][ec]
                cell = f"{p.name}/{i.name}/{d.name}"
                if self.is_suspect(e, ec):
                    cell += "?"
                entries.append(cell)
            lines.append(",".join(entries))
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "RuleTable":
        """Parse the override-file format produced by dump().

        Rows are error-rate labels NB through PB, columns error labels NB
        through PB. '0' is accepted as an alias for ZO; a trailing '?'
        marks a cell as suspect.
        """
        rows = [line.strip() for line in text.splitlines()]
        rows = [line for line in rows if line and not line.startswith("#")]
        if len(rows) != 7:
            raise ValueError(f"rule table needs 7 data lines, got {len(rows)}")
        by_ec: list[list[Triple]] = []
        suspect: set[tuple[Label, Label]] = set()
        for ec_idx, line in enumerate(rows):
            entries = [entry.strip() for entry in line.split(",")]
            if len(entries) != 7:
                raise ValueError(f"line {ec_idx + 1}: expected 7 cells, got {len(entries)}")
            row: list[Triple] = []
            for e_idx, entry in enumerate(entries):
                if entry.endswith("?"):
                    suspect.add((Label(e_idx), Label(ec_idx)))
                    entry = entry[:-1].strip()
                parts = entry.split("/")
                if len(parts) != 3:
                    raise ValueError(f"cell {entry!r} is not a P/I/D triple")
                row.append(tuple(_parse_label(part) for part in parts))
            by_ec.append(row)
        # Transpose: storage is cells[e][ec], the file is row-per-ec.
        cells = tuple(tuple(by_ec[ec][e] for ec in range(7)) for e in range(7))
        return cls(cells=cells, suspect=frozenset(suspect))

    @classmethod
    def load(cls, path) -> "RuleTable":
        with open(path, "r", encoding="ascii") as fh:
            return cls.parse(fh.read())


def _parse_label(token: str) -> Label:
    token = token.strip().upper()
    if token == "0":
        return Label.ZO
    try:
        return Label[token]
    except KeyError:
        raise ValueError(f"unknown linguistic label {token!r}") from None


# Golden transcription of the shipped rule base. Rows are error-rate labels
# NB..PB, columns error labels NB..PB. Two cells are flagged '?': the source
# prints a bare "B" for (E=NM, EC=NS), encoded here as NB, and an anomalous
# middle element for (E=NS, EC=PM), encoded as printed.
_DEFAULT_TABLE_TEXT = """\
PB/NB/PS,PB/NB/PS,PM/NB/ZO,PM/NM/ZO,PS/NM/ZO,PS/ZO/PB,ZO/ZO/PB
PB/NB/NS,PB/NB/NS,PM/NM/NS,PM/NM/NS,PS/NS/ZO,ZO/ZO/NS,ZO/ZO/PM
PM/NM/NB,PM/NM/NB?,PM/NS/NM,PS/NS/NS,ZO/ZO/ZO,NS/PS/PS,NM/PS/PM
PM/NM/NB,PS/NS/NM,PS/NS/NM,ZO/ZO/NS,NS/PS/ZO,NM/PS/PS,NM/PM/PM
PS/NS/NB,PS/NS/NM,ZO/ZO/NS,NS/PS/NS,NS/PS/ZO,NM/PM/PS,NM/PM/PS
ZO/ZO/NM,PS/NS/NM,PS/PS/NS?,NM/PM/NS,NM/PM/ZO,NM/PB/PS,NB/PB/PS
ZO/ZO/PS,NS/ZO/ZO,NS/PS/ZO,NM/PM/ZO,NM/PB/ZO,NB/PB/PB,NB/PB/PB
"""

DEFAULT_RULE_TABLE = RuleTable.parse(_DEFAULT_TABLE_TEXT)


def rule_lookup(e_label: Label, ec_label: Label, table: RuleTable | None = None) -> Triple:
    """Consequent labels for one (E, EC) pair from the given table."""
    return (table or DEFAULT_RULE_TABLE).lookup(e_label, ec_label)


@dataclass(frozen=True)
class ScalingFactors:
    """Quantization factors for the inputs and scale factors for the outputs.

    ke and kec map error and error rate into the universe; kup, kui and kud
    map defuzzified universe values into engineering gain deltas.
    """

    ke: float = 5.0
    kec: float = 0.8
    kup: float = 0.45
    kui: float = 0.45
    kud: float = 0.45

    def __post_init__(self) -> None:
        for name in ("ke", "kec"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        for name in ("kup", "kui", "kud"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be non-negative and finite, got {v!r}")


@dataclass(frozen=True)
class GainDeltas:
    """Crisp gain corrections in engineering units, after output scaling."""

    d_kp: float
    d_ki: float
    d_kd: float


class _InferenceEngine:
    """Precomputed defuzzification grid for one rule table.

    Holds the universe grid and the membership of every output label on it,
    so the per-call work is just firing strengths, clipping, aggregation
    and one centroid per output channel.
    """

    def __init__(self, table: RuleTable, grid_step: float):
        if not (0 < grid_step <= LABEL_SPACING):
            raise ValueError(f"grid step out of range: {grid_step!r}")
        self.table = table
        n = round((UNIVERSE_MAX - UNIVERSE_MIN) / grid_step) + 1
        self.grid = np.linspace(UNIVERSE_MIN, UNIVERSE_MAX, n)
        centers = np.array(LABEL_CENTERS)
        mf = 1.0 - np.abs(self.grid[None, :] - centers[:, None]) / LABEL_SPACING
        np.clip(mf, 0.0, 1.0, out=mf)
        # Shoulder saturation only matters at the clamped endpoints, where the
        # triangles already evaluate to 1; kept for clarity.
        mf[Label.NB, self.grid <= UNIVERSE_MIN] = 1.0
        mf[Label.PB, self.grid >= UNIVERSE_MAX] = 1.0
        self.output_mf = mf

    def infer(self, e_scaled: float, ec_scaled: float) -> tuple[float, float, float]:
        mu_e = fuzzify(e_scaled).tolist()
        mu_ec = fuzzify(ec_scaled).tolist()
        # Per output channel, the clip height of each output label is the max
        # firing strength over the (at most four) rules that name it.
        heights = np.zeros((3, 7))
        cells = self.table.cells
        for ie, deg_e in enumerate(mu_e):
            if deg_e <= 0.0:
                continue
            row = cells[ie]
            for iec, deg_ec in enumerate(mu_ec):
                if deg_ec <= 0.0:
                    continue
                strength = deg_e if deg_e < deg_ec else deg_ec
                for channel, label in enumerate(row[iec]):
                    if strength > heights[channel, label]:
                        heights[channel, label] = strength
        clipped = np.minimum(heights[:, :, None], self.output_mf[None, :, :])
        agg = clipped.max(axis=1)
        mass = agg.sum(axis=1)
        moment = agg @ self.grid
        dp, di, dd = moment / mass
        return float(dp), float(di), float(dd)


@functools.lru_cache(maxsize=16)
def _engine(table: RuleTable, grid_step: float) -> _InferenceEngine:
    return _InferenceEngine(table, grid_step)


def infer_deltas(
    e_scaled: float,
    ec_scaled: float,
    table: RuleTable | None = None,
    grid_step: float = DEFAULT_GRID_STEP,
) -> tuple[float, float, float]:
    """Crisp (dKp, dKi, dKd) universe values for scaled error and error rate.

    Both inputs must already lie in [-6, 6]. The partition of unity
    guarantees at least one rule fires, so the centroid always exists, and
    every result lies in [-6, 6].
    """
    return _engine(table or DEFAULT_RULE_TABLE, grid_step).infer(e_scaled, ec_scaled)


def scale_deltas(crisp: tuple[float, float, float], factors: ScalingFactors) -> GainDeltas:
    """Map defuzzified universe values to engineering gain deltas."""
    for v in crisp:
        if not (UNIVERSE_MIN <= v <= UNIVERSE_MAX):
            raise ValueError(f"crisp delta out of universe range: {v!r}")
    p, i, d = crisp
    return GainDeltas(d_kp=factors.kup * p, d_ki=factors.kui * i, d_kd=factors.kud * d)
