"""
Golden-file regression cases and the synthetic data corpus.

A golden case runs one CLI invocation (or a kernel identity table) and
compares the result numerically with a committed file. The corpus is a set
of simulated ACD(1,1) series shaped like daily trading volumes, generated
from documented parameters and seeds and checksummed in a manifest.
"""

from __future__ import annotations

import contextlib
import csv
import hashlib
import io
import json
import math
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acd import ACDParams, simulate_acd, write_series_csv
from .kernels import eval_induced, get_kernel, self_convolution
from .numerics import Rng

__all__ = [
    "GoldenCase",
    "GoldenResult",
    "load_cases",
    "replay_golden",
    "kernel_identity_table",
    "CORPUS_SPECS",
    "build_corpus",
    "verify_corpus",
    "sha256_file",
]


@dataclass
class GoldenCase:
    """One regression case.

    ``kind`` is ``"cli"`` (``argv`` is run through the command line and its
    output compared) or ``"kernel"`` (numeric self-convolution compared with
    the committed closed-form table).
    """

    name: str
    kind: str
    expected: str
    argv: list = field(default_factory=list)
    atol: float = 0.0
    rtol: float = 0.0
    kernel: str = ""


@dataclass
class GoldenResult:
    name: str
    passed: bool
    max_abs_diff: float
    report: list

    def __str__(self):
        head = f"{self.name}: {'ok' if self.passed else 'FAILED'} (max |diff| {self.max_abs_diff:.3g})"
        return "\n".join([head, *self.report])


def load_cases(path) -> list:
    path = Path(path)
    raw = json.loads(path.read_text())
    return [GoldenCase(**c) for c in raw["cases"]]


# ---------------------------------------------------------------------------
# comparison


def _cells(text: str, suffix: str):
    if suffix == ".json":
        def flat(obj, prefix=""):
            if isinstance(obj, dict):
                for k in sorted(obj):
                    yield from flat(obj[k], f"{prefix}{k}.")
            elif isinstance(obj, list):
                for i, v in enumerate(obj):
                    yield from flat(v, f"{prefix}{i}.")
            else:
                yield prefix.rstrip("."), obj
        return list(flat(json.loads(text)))
    rows = list(csv.reader(io.StringIO(text)))
    return [(f"r{i}c{j}", v) for i, row in enumerate(rows) for j, v in enumerate(row)]


def _as_number(v):
    if isinstance(v, bool):
        return None
    if isinstance(v, (int, float)):
        return float(v)
    try:
        return float(v)
    except (TypeError, ValueError):
        return None


def compare_text(actual: str, expected: str, suffix: str, atol: float, rtol: float):
    """Cell-by-cell comparison; numbers within ``atol + rtol |expected|``."""
    a, e = _cells(actual, suffix), _cells(expected, suffix)
    report = []
    worst = 0.0
    if [k for k, _ in a] != [k for k, _ in e]:
        report.append(f"layout differs: {len(a)} cells vs {len(e)} expected")
        return False, math.inf, report
    for (key, va), (_, ve) in zip(a, e):
        na, ne = _as_number(va), _as_number(ve)
        if na is None or ne is None:
            if va != ve:
                report.append(f"{key}: {va!r} != {ve!r}")
            continue
        if math.isnan(ne) and math.isnan(na):
            continue
        d = abs(na - ne)
        worst = max(worst, d)
        if not d <= atol + rtol * abs(ne):
            report.append(f"{key}: {na!r} vs {ne!r} (diff {d:.3g})")
    return not report, worst, report


# ---------------------------------------------------------------------------
# replay


def kernel_identity_table(family: str, grid=None) -> str:
    """CSV of ``a, closed form`` for the induced kernel of a compact family."""
    spec = get_kernel(family)
    grid = np.linspace(-3.0, 3.0, 61) if grid is None else grid
    rows = [[f"{a:.2f}", repr(float(eval_induced(spec, a)))] for a in grid]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a", "induced"])
    w.writerows(rows)
    return buf.getvalue()


def _kernel_actual(family: str, expected_text: str) -> str:
    rows = list(csv.reader(io.StringIO(expected_text)))[1:]
    spec = get_kernel(family)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a", "induced"])
    for a, _ in rows:
        w.writerow([a, repr(float(self_convolution(spec, float(a))))])
    return buf.getvalue()


def _run_cli(argv, out_suffix):
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / f"out{out_suffix}"
        err = io.StringIO()
        with contextlib.redirect_stderr(err):
            status = main([*argv, "--out", str(out)])
        if status != 0:
            raise RuntimeError(f"command failed with status {status}: {err.getvalue().strip()}")
        return out.read_text()


def replay_golden(case: GoldenCase, root) -> GoldenResult:
    """Re-run a case and diff it against ``root / case.expected``.

    Relative paths inside ``argv`` are resolved against ``root``.
    """
    root = Path(root)
    expected_path = root / case.expected
    expected = expected_path.read_text()
    suffix = expected_path.suffix
    if case.kind == "kernel":
        actual = _kernel_actual(case.kernel, expected)
    elif case.kind == "cli":
        argv = [str(root / a) if (root / a).is_file() else a for a in case.argv]
        try:
            actual = _run_cli(argv, suffix)
        except RuntimeError as exc:
            return GoldenResult(case.name, False, math.inf, [str(exc)])
    else:
        raise ValueError(f"unknown golden kind {case.kind!r}")
    ok, worst, report = compare_text(actual, expected, suffix, case.atol, case.rtol)
    return GoldenResult(case.name, ok, worst, report)


# ---------------------------------------------------------------------------
# corpus

# Stand-ins for daily volume series: ACD(1,1) with the persistence reported
# for each asset and year, omega chosen so the unconditional mean matches
# the reported sample mean. T = 252 trading days.
CORPUS_SPECS = [
    # name, beta1, beta2, mean
    ("BA_2005", 0.366, 0.534, 11.24),
    ("JPM_2005", 0.402, 0.132, 10.60),
    ("MSF_2005", 0.271, 0.340, 66.61),
    ("KO_2005", 0.202, 0.377, 11.86),
    ("UL_2005", 0.331, 0.529, 0.59),
    ("BA_2008", 0.624, 0.323, 78.63),
    ("JPM_2008", 0.691, 0.122, 48.99),
    ("MSF_2008", 0.595, 0.272, 84.17),
    ("KO_2008", 0.488, 0.371, 25.26),
    ("UL_2008", 0.571, 0.290, 1.08),
    ("BA_2018", 0.538, 0.141, 67.91),
    ("JPM_2018", 0.459, 0.345, 15.17),
    ("MSF_2018", 0.570, 0.268, 31.59),
    ("KO_2018", 0.392, 0.382, 12.52),
    ("UL_2018", 0.435, 0.483, 1.05),
]
CORPUS_SEED = 2005
CORPUS_T = 252


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_corpus(directory, seed: int = CORPUS_SEED, T: int = CORPUS_T) -> dict:
    """Write the corpus CSVs and ``manifest.json`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, (name, b1, b2, mean) in enumerate(CORPUS_SPECS):
        omega = (1.0 - b1 - b2) * mean
        x = simulate_acd(ACDParams(omega, b1, b2), T, 500, Rng(seed, k))
        path = directory / f"{name}.csv"
        write_series_csv(path, x, header="volume")
        entries.append({
            "file": path.name, "omega": omega, "beta1": b1, "beta2": b2, "T": T,
            "seed": seed, "stream": k, "sha256": sha256_file(path),
        })
    manifest = {
        "description": "Synthetic ACD(1,1) stand-ins for daily trading volumes",
        "generator": "fmboot.golden.build_corpus",
        "files": entries,
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def verify_corpus(directory) -> list:
    """Return the files whose checksum does not match the manifest."""
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    bad = []
    for e in manifest["files"]:
        p = directory / e["file"]
        if not p.is_file() or sha256_file(p) != e["sha256"]:
            bad.append(e["file"])
    return bad
