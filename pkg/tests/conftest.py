"""Shared fixtures: toy corpus, synthetic corpus, optional demo dataset.

The synthetic corpus imitates the shape of hospital lab ordering:
items cluster into panels (order sets), and each bag is one or two
panels with per-item dropout plus noise. It is fully deterministic, so
tests that assert byte-identical pipeline outputs can run on it.

The real demo dataset cannot be redistributed, so tests that pin its
published counts look for it under data/mimic-iii-demo/ (or the
LABREC_MIMIC_DEMO_DIR environment variable) and skip with an explicit
message when absent.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np
import pytest

from labrec import (
    HyperParams,
    Metric,
    RawBag,
    build_vocabulary,
    fit,
    index_bags,
)

CORPUS_SEED = 7

_PANELS = {
    "cbc": (0, 1, 2, 3, 4, 5, 6),
    "bmp": (7, 8, 9, 10, 11, 12, 13, 14),
    "hepatic": (15, 16, 17, 18, 19, 20, 21),
    "coag": (22, 23, 24, 25),
    "blood_gas": (26, 27, 28, 29, 30, 31),
    "lipid": (32, 33, 34, 35, 36),
    "thyroid": (37, 38, 39),
    "urine": (40, 41, 42, 43, 44, 45),
}

_NAMED_ITEMS = [
    "Hemoglobin", "Hematocrit", "White Blood Cells", "Platelet Count",
    "Red Blood Cells", "MCV", "MCH",
    "Sodium", "Potassium", "Chloride", "Bicarbonate", "Urea Nitrogen",
    "Creatinine", "Glucose", "Anion Gap",
    "Alanine Aminotransferase", "Asparate Aminotransferase",
    "Alkaline Phosphatase", "Bilirubin, Total", "Bilirubin, Direct",
    "Albumin", "Total Protein",
    "PT", "PTT", "INR(PT)", "Fibrinogen",
    "pH", "pO2", "pCO2", "Base Excess", "Lactate", "Oxygen Saturation",
    "Cholesterol, Total", "Triglycerides", "HDL Cholesterol",
    "LDL Calculated", "Lipoprotein(a)",
    "TSH", "Thyroxine (T4)", "Triiodothyronine (T3)",
    "Specific Gravity", "Urine Color", "Ketone", "Urine pH",
    "Protein/Creatinine Ratio", "Nitrite",
]

N_ITEMS = 80
N_PATIENTS = 40
BAGS_PER_PATIENT = 10


def _item_id(index: int) -> str:
    return str(50800 + index)


def _item_name(index: int) -> str:
    if index < len(_NAMED_ITEMS):
        return _NAMED_ITEMS[index]
    return f"Assay {index}"


def make_synthetic_corpus(target_dir: Path) -> tuple[Path, Path]:
    """Write a deterministic LABEVENTS/D_LABITEMS pair under target_dir.

    Includes a handful of rows with a blank CHARTTIME and a handful
    missing ITEMID so ingestion's skip accounting is exercised, plus
    duplicated in-bag measurements so dedup is exercised.
    """
    rng = np.random.default_rng(CORPUS_SEED)
    panel_names = sorted(_PANELS)
    rows: list[tuple[str, str, str, str]] = []
    for p in range(N_PATIENTS):
        subject_id = str(10000 + p)
        hadm_id = str(150000 + p)
        for visit in range(BAGS_PER_PATIENT):
            day = 1 + visit * 2 + int(rng.integers(0, 2))
            charttime = f"2130-0{1 + p % 9}-{day:02d} {6 + int(rng.integers(0, 12)):02d}:00:00"
            chosen = [panel_names[int(rng.integers(0, len(panel_names)))]]
            if rng.random() < 0.2:
                chosen.append(panel_names[int(rng.integers(0, len(panel_names)))])
            items: list[int] = []
            for panel in chosen:
                for idx in _PANELS[panel]:
                    if rng.random() >= 0.15:
                        items.append(idx)
            if rng.random() < 0.3:
                items.append(int(rng.integers(46, N_ITEMS)))
            if not items:
                items.append(int(rng.integers(0, N_ITEMS)))
            for idx in items:
                rows.append((subject_id, hadm_id, _item_id(idx), charttime))
            if rng.random() < 0.1:
                rows.append((subject_id, hadm_id, _item_id(items[0]), charttime))

    labevents = target_dir / "LABEVENTS.csv"
    with open(labevents, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ROW_ID", "SUBJECT_ID", "HADM_ID", "ITEMID", "CHARTTIME", "VALUE"])
        row_id = 1
        for subject_id, hadm_id, itemid, charttime in rows:
            writer.writerow([row_id, subject_id, hadm_id, itemid, charttime, "1.0"])
            row_id += 1
        for _ in range(7):
            writer.writerow([row_id, "10000", "150000", _item_id(0), "", "1.0"])
            row_id += 1
        for _ in range(3):
            writer.writerow([row_id, "10001", "150001", "", "2130-01-01 08:00:00", "1.0"])
            row_id += 1

    d_labitems = target_dir / "D_LABITEMS.csv"
    with open(d_labitems, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ROW_ID", "ITEMID", "LABEL", "FLUID", "CATEGORY"])
        for idx in range(N_ITEMS):
            writer.writerow([idx + 1, _item_id(idx), _item_name(idx), "Blood", "Chemistry"])
    return labevents, d_labitems


@pytest.fixture(scope="session")
def synthetic_csvs(tmp_path_factory) -> tuple[Path, Path]:
    target = tmp_path_factory.mktemp("synthetic-corpus")
    return make_synthetic_corpus(target)


@pytest.fixture(scope="session")
def synthetic_bags(synthetic_csvs):
    from labrec.ingest import extract_bags, parse_labevents

    labevents, _ = synthetic_csvs
    return extract_bags(parse_labevents(labevents).rows)


@pytest.fixture(scope="session")
def synthetic_model(synthetic_bags):
    vocabulary = build_vocabulary(synthetic_bags)
    bags = index_bags(synthetic_bags, vocabulary)
    return fit(bags, vocabulary, HyperParams(s=20, metric=Metric.JACCARD))


TOY_RAW_BAGS = (
    RawBag("p1", "2130-01-01 08:00:00", ("CBC", "Na", "K")),
    RawBag("p2", "2130-01-02 08:00:00", ("CBC", "Na", "Cl")),
    RawBag("p3", "2130-01-03 08:00:00", ("Glu",)),
)


@pytest.fixture()
def toy_model():
    """Three hand-checkable bags; with s=2 and jaccard the oracle holds.

    Vocabulary order is first-seen: CBC=0, Na=1, K=2, Cl=3, Glu=4.
    Query {CBC, Na}: neighbours are bags 0 and 1 (distance 1/3 each);
    ranking without exclusion starts [CBC, Na], with exclusion [K, Cl].
    """
    vocabulary = build_vocabulary(TOY_RAW_BAGS)
    bags = index_bags(TOY_RAW_BAGS, vocabulary)
    return fit(bags, vocabulary, HyperParams(s=2, metric=Metric.JACCARD))


def find_demo_dir() -> Path | None:
    """Locate the demo CSV directory, if the operator provided one."""
    candidates = []
    env = os.environ.get("LABREC_MIMIC_DEMO_DIR")
    if env:
        candidates.append(Path(env))
    candidates.append(Path(__file__).resolve().parent.parent / "data" / "mimic-iii-demo")
    for candidate in candidates:
        for name in ("LABEVENTS.csv", "labevents.csv", "LABEVENTS.csv.gz"):
            if (candidate / name).is_file():
                return candidate
    return None


@pytest.fixture(scope="session")
def demo_dir() -> Path:
    found = find_demo_dir()
    if found is None:
        pytest.skip(
            "demo dataset not present: place the demo LABEVENTS.csv/D_LABITEMS.csv "
            "under data/mimic-iii-demo/ or set LABREC_MIMIC_DEMO_DIR"
        )
    return found


def demo_labevents_path(demo: Path) -> Path:
    for name in ("LABEVENTS.csv", "labevents.csv"):
        if (demo / name).is_file():
            return demo / name
    raise FileNotFoundError("no LABEVENTS csv in demo directory")


_ACCEPTANCE_RESULTS: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): end-to-end acceptance criterion"
    )


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        label = marker.args[0]
        if report.when == "call" and report.passed:
            _ACCEPTANCE_RESULTS.setdefault(label, ("PASS", ""))
        elif report.skipped:
            reason = ""
            if isinstance(report.longrepr, tuple):
                reason = report.longrepr[2]
            _ACCEPTANCE_RESULTS[label] = ("SKIP", reason)
        elif report.failed:
            _ACCEPTANCE_RESULTS[label] = ("FAIL", "")
    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, (status, extra) in _ACCEPTANCE_RESULTS.items():
        line = f"[{status}] {label}"
        if extra:
            line += f" -- {extra}"
        terminalreporter.write_line(line)
