"""Parse LABEVENTS-style CSVs and group rows into order bags.

Rows sharing a (SUBJECT_ID, CHARTTIME) key were ordered together and
become one bag. Timestamps are compared as trimmed strings, never
parsed: the source stores second-precision strings and string equality
is exactly the grouping the data supports. An alternative grouping that
also includes HADM_ID is available for datasets where order times
collide across admissions.

Only three columns are required (SUBJECT_ID, ITEMID, CHARTTIME,
case-insensitive); everything else in the file is ignored. D_LABITEMS
is used solely to attach display labels to item ids.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .core import RawBag, Vocabulary
from .errors import SchemaError

REQUIRED_LABEVENTS_COLUMNS = ("SUBJECT_ID", "ITEMID", "CHARTTIME")
REQUIRED_D_LABITEMS_COLUMNS = ("ITEMID", "LABEL")


@dataclass(frozen=True)
class LabEventRow:
    """One laboratory measurement row, reduced to the grouping fields."""

    subject_id: str
    hadm_id: str | None
    itemid: str
    charttime: str


@dataclass
class LabEventsParse:
    """parse_labevents output: usable rows plus skip counters."""

    rows: list[LabEventRow]
    skipped_no_charttime: int = 0
    skipped_incomplete: int = 0


def _header_map(header: Sequence[str], required: Sequence[str], path) -> dict[str, int]:
    positions = {name.strip().upper(): i for i, name in enumerate(header)}
    for column in required:
        if column not in positions:
            raise SchemaError(f"{path}: missing required column {column}")
    return positions


def parse_labevents(csv_path: str | Path) -> LabEventsParse:
    """Read a LABEVENTS CSV into rows, skipping unusable lines.

    Lines with an empty CHARTTIME (results never tied to an order time)
    are skipped and counted separately from lines missing SUBJECT_ID or
    ITEMID. A missing required column raises SchemaError naming it.
    """
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{csv_path}: file is empty, expected a header row") from None
        positions = _header_map(header, REQUIRED_LABEVENTS_COLUMNS, csv_path)
        subject_col = positions["SUBJECT_ID"]
        itemid_col = positions["ITEMID"]
        charttime_col = positions["CHARTTIME"]
        hadm_col = positions.get("HADM_ID")

        result = LabEventsParse(rows=[])
        for record in reader:
            if not record:
                continue
            try:
                subject_id = record[subject_col].strip()
                itemid = record[itemid_col].strip()
                charttime = record[charttime_col].strip()
            except IndexError:
                result.skipped_incomplete += 1
                continue
            if not charttime:
                result.skipped_no_charttime += 1
                continue
            if not subject_id or not itemid:
                result.skipped_incomplete += 1
                continue
            hadm_id = None
            if hadm_col is not None and hadm_col < len(record):
                hadm_id = record[hadm_col].strip() or None
            result.rows.append(LabEventRow(subject_id, hadm_id, itemid, charttime))
    return result


def extract_bags(rows: list[LabEventRow], include_hadm_id: bool = False) -> list[RawBag]:
    """Group rows ordered at the same time into bags.

    The grouping key is (subject_id, charttime), optionally extended
    with hadm_id. Duplicate itemids within a group collapse to one;
    item order within a bag is first occurrence in the file, and bags
    are sorted by (subject_id, charttime) so repeated runs over the
    same file produce an identical bag list.
    """
    groups: dict[tuple, list[str]] = {}
    seen_in_group: dict[tuple, set[str]] = {}
    for row in rows:
        if include_hadm_id:
            key = (row.subject_id, row.charttime, row.hadm_id or "")
        else:
            key = (row.subject_id, row.charttime)
        items = groups.setdefault(key, [])
        seen = seen_in_group.setdefault(key, set())
        if row.itemid not in seen:
            seen.add(row.itemid)
            items.append(row.itemid)
    return [
        RawBag(subject_id=key[0], charttime=key[1], item_ids=tuple(groups[key]))
        for key in sorted(groups)
    ]


def join_item_names(vocabulary: Vocabulary, d_labitems_path: str | Path) -> Vocabulary:
    """Attach D_LABITEMS labels as display names.

    Items without a label row (or with an empty LABEL) keep the item_id
    as their name. The first label wins if an ITEMID repeats.
    """
    labels: dict[str, str] = {}
    with open(d_labitems_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(
                f"{d_labitems_path}: file is empty, expected a header row"
            ) from None
        positions = _header_map(header, REQUIRED_D_LABITEMS_COLUMNS, d_labitems_path)
        itemid_col = positions["ITEMID"]
        label_col = positions["LABEL"]
        for record in reader:
            if not record or len(record) <= max(itemid_col, label_col):
                continue
            itemid = record[itemid_col].strip()
            label = record[label_col].strip()
            if itemid and label and itemid not in labels:
                labels[itemid] = label
    return vocabulary.with_names(labels)


@dataclass(frozen=True)
class IngestSummary:
    """Counts reported after a full ingest run."""

    rows_parsed: int
    rows_skipped_no_charttime: int
    rows_skipped_incomplete: int
    bags: int
    distinct_bag_contents: int
    distinct_items: int
    distinct_patients: int
    grouping: str


def summarize(parse: LabEventsParse, bags: list[RawBag], grouping: str) -> IngestSummary:
    return IngestSummary(
        rows_parsed=len(parse.rows),
        rows_skipped_no_charttime=parse.skipped_no_charttime,
        rows_skipped_incomplete=parse.skipped_incomplete,
        bags=len(bags),
        distinct_bag_contents=len({frozenset(b.item_ids) for b in bags}),
        distinct_items=len({r.itemid for r in parse.rows}),
        distinct_patients=len({r.subject_id for r in parse.rows}),
        grouping=grouping,
    )
