"""CSV datasets, result tables, and the flat ``key = value`` experiment config."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Optional

from .core import (AgeGroup, CollectionMode, Dataset, Gender, N_SYMPTOMS, Record,
                   Role, SYMPTOMS)

DATASET_HEADER = SYMPTOMS + ("age_group", "gender", "flu")
RESULT_HEADER = ("method", "dataset", "age_group", "gender", "label_fraction",
                 "seed", "auc", "theta_choice")
METHODS = ("TR", "LR", "FEDA", "FEDA_pop", "Hier", "Hier_pop")

_AGES = {a.value: a for a in AgeGroup}
_GENDERS = {g.value: g for g in Gender}


class SchemaError(ValueError):
    """Raised when a file does not match its schema; the message names row and column."""


def load_dataset(path, name: str, mode: CollectionMode, role: Role) -> Dataset:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise SchemaError(f"{path}: empty file")
    header = tuple(c.strip("\r") for c in lines[0].split(","))
    if header != DATASET_HEADER:
        raise SchemaError(f"{path}: bad header {lines[0]!r}, expected {','.join(DATASET_HEADER)}")

    records = []
    for row_no, line in enumerate(lines[1:], start=2):
        cells = line.rstrip("\r").split(",")
        if len(cells) != len(DATASET_HEADER):
            raise SchemaError(f"{path}: row {row_no}: expected {len(DATASET_HEADER)} cells, got {len(cells)}")
        x = []
        for col, cell in zip(SYMPTOMS, cells[:N_SYMPTOMS]):
            if cell not in ("0", "1"):
                raise SchemaError(f"{path}: row {row_no}, column {col}: invalid symptom value {cell!r}")
            x.append(int(cell))
        age_cell, gender_cell, flu_cell = cells[N_SYMPTOMS:]
        if age_cell not in _AGES:
            raise SchemaError(f"{path}: row {row_no}, column age_group: invalid value {age_cell!r}")
        if gender_cell not in _GENDERS:
            raise SchemaError(f"{path}: row {row_no}, column gender: invalid value {gender_cell!r}")
        if flu_cell not in ("0", "1", ""):
            raise SchemaError(f"{path}: row {row_no}, column flu: invalid value {flu_cell!r}")
        if flu_cell == "" and role is Role.Source:
            raise SchemaError(f"{path}: row {row_no}, column flu: missing label in source dataset {name!r}")
        y = None if flu_cell == "" else int(flu_cell)
        records.append(Record(tuple(x), _AGES[age_cell], _GENDERS[gender_cell], y))
    return Dataset(name, mode, role, tuple(records))


def write_dataset(d: Dataset, path) -> None:
    out = [",".join(DATASET_HEADER)]
    for r in d.records:
        flu = "" if r.y is None else str(r.y)
        out.append(",".join([*map(str, r.x), r.age.value, r.gender.value, flu]))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


# --- results -----------------------------------------------------------------

@dataclass(frozen=True)
class ResultRow:
    method: str
    dataset: str
    age_group: str          # age label or "ALL"
    gender: str             # "M", "F" or "ALL"
    label_fraction: float
    seed: int
    auc: Optional[float]    # None renders as "-"
    theta_choice: str = ""


def format_auc(auc: Optional[float]) -> str:
    return "-" if auc is None else f"{auc:.6f}"


def write_results(rows: Iterable[ResultRow], path) -> None:
    rows = list(rows)
    if not rows:
        raise ValueError("no result rows to write")
    out = [",".join(RESULT_HEADER)]
    for r in rows:
        out.append(",".join([r.method, r.dataset, r.age_group, r.gender,
                             repr(float(r.label_fraction)), str(r.seed),
                             format_auc(r.auc), r.theta_choice]))
    try:
        Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_results(path) -> list[ResultRow]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or tuple(lines[0].split(",")) != RESULT_HEADER:
        raise SchemaError(f"{path}: bad results header")
    rows = []
    for row_no, line in enumerate(lines[1:], start=2):
        c = line.split(",")
        if len(c) != len(RESULT_HEADER):
            raise SchemaError(f"{path}: row {row_no}: expected {len(RESULT_HEADER)} cells")
        auc = None if c[6] == "-" else float(c[6])
        rows.append(ResultRow(c[0], c[1], c[2], c[3], float(c[4]), int(c[5]), auc, c[7]))
    return rows


# --- config ------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    target: str = "goviral"
    sources: tuple[str, ...] = ("fluwatch", "hongkong", "hutterite")
    label_fraction: float = 0.2
    seeds: tuple[int, ...] = (0,)
    lambda_: float = 1.0
    beta: float = 0.2
    alpha: float = 0.1
    tau: float = 0.9
    powell_tol: float = 1e-6
    powell_max_iter: int = 500
    methods: tuple[str, ...] = METHODS
    min_samples: int = 5
    stratify: bool = True
    feda_domain: str = "dataset"
    squared_div: bool = True

    def __post_init__(self):
        if not (0.0 < self.label_fraction <= 1.0):
            raise ValueError(f"label_fraction must be in (0, 1], got {self.label_fraction}")
        if self.lambda_ < 0 or self.beta < 0:
            raise ValueError("lambda and beta must be >= 0")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if not (0.0 < self.tau <= 1.0):
            raise ValueError("tau must be in (0, 1]")
        if self.powell_max_iter < 1 or self.powell_tol <= 0:
            raise ValueError("powell_max_iter must be >= 1 and powell_tol > 0")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; choose from {METHODS}")
        if not self.methods:
            raise ValueError("methods must not be empty")
        if not self.seeds:
            raise ValueError("seeds must not be empty")
        if self.target in self.sources:
            raise ValueError(f"target {self.target!r} also listed as a source")
        if self.feda_domain not in ("dataset", "mode"):
            raise ValueError("feda_domain must be 'dataset' or 'mode'")

    @property
    def datasets(self) -> tuple[str, ...]:
        return (self.target,) + tuple(self.sources)


_KEY_ALIASES = {"lambda": "lambda_"}


def _parse_bool(s: str) -> bool:
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _coerce(name: str, raw: str):
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    kind = kinds[name]
    if kind == "tuple[str, ...]":
        return tuple(p.strip() for p in raw.split(",") if p.strip())
    if kind == "tuple[int, ...]":
        return tuple(int(p) for p in raw.split(",") if p.strip())
    if kind == "float":
        val = float(raw)
        if not math.isfinite(val):
            raise ValueError(f"{name} must be finite")
        return val
    if kind == "int":
        return int(raw)
    if kind == "bool":
        return _parse_bool(raw)
    return raw


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    values = {}
    known = {f.name for f in fields(ExperimentConfig)}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{line_no}: expected 'key = value'")
        key, raw = (p.strip() for p in line.split("=", 1))
        name = _KEY_ALIASES.get(key, key)
        if name not in known or name == "lambda_" and key != "lambda":
            raise ValueError(f"{source}:{line_no}: unknown key {key!r}")
        try:
            values[name] = _coerce(name, raw)
        except ValueError as exc:
            raise ValueError(f"{source}:{line_no}: bad value for {key!r}: {exc}") from None
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), source=str(path))


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        key = "lambda" if f.name == "lambda_" else f.name
        val = getattr(cfg, f.name)
        if isinstance(val, tuple):
            val = ",".join(map(str, val))
        elif isinstance(val, bool):
            val = "true" if val else "false"
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


# --- data directory manifest --------------------------------------------------

MANIFEST = "manifest.csv"


def write_manifest(datasets: Iterable[Dataset], out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["name,mode,file"]
    for d in datasets:
        fname = f"{d.name}.csv"
        write_dataset(d, out_dir / fname)
        lines.append(f"{d.name},{d.mode.value},{fname}")
    (out_dir / MANIFEST).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_data_dir(data_dir, cfg: ExperimentConfig) -> list[Dataset]:
    """Load the datasets named by ``cfg`` (target first) from a generated directory."""
    data_dir = Path(data_dir)
    entries = {}
    lines = (data_dir / MANIFEST).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "name,mode,file":
        raise SchemaError(f"{data_dir / MANIFEST}: bad header")
    for line in lines[1:]:
        name, mode, fname = line.split(",")
        entries[name] = (CollectionMode(mode), fname)
    out = []
    for name in cfg.datasets:
        if name not in entries:
            raise KeyError(f"dataset {name!r} not found in {data_dir}")
        mode, fname = entries[name]
        role = Role.Target if name == cfg.target else Role.Source
        out.append(load_dataset(data_dir / fname, name, mode, role))
    return out
