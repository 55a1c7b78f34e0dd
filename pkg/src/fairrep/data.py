"""Dataset ingestion: UCI Adult, ProPublica COMPAS and synthetic Gaussian cells.

Raw files are always passed in by path. :func:`data_dir` resolves the
default location (``$FAIRREP_DATA_DIR`` or ``./data``) for callers that want
one; nothing in here downloads anything.
"""
from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .metrics import base_rates

log = logging.getLogger(__name__)

ADULT_COLUMNS = [
    "age",
    "workclass",
    "fnlwgt",
    "education",
    "education-num",
    "marital-status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
    "native-country",
    "income",
]
ADULT_CONTINUOUS = ["age", "fnlwgt", "education-num", "capital-gain", "capital-loss", "hours-per-week"]
ADULT_DROP = ("fnlwgt", "education-num")

COMPAS_FILE = "compas-scores-two-years.csv"
ADULT_FILES = ("adult.data", "adult.test")
COMPAS_TRAIN_FRACTION = 0.7
# No canonical train/test split ships with the data. This is the smallest seed
# whose test split has D0(Y=1), D1(Y=1), D(Y=1), D(A=1) each within 0.01 of
# 0.400, 0.529, 0.467, 0.514 and a base-rate gap within 0.0015 of 0.129
# (see test_compas_split_seed_is_smallest_match).
COMPAS_SPLIT_SEED = 61


class IngestionError(ValueError):
    pass


def data_dir() -> Path:
    return Path(os.environ.get("FAIRREP_DATA_DIR", "data"))


@dataclass(eq=False)
class Dataset:
    """Features ``x`` (n x d), labels ``y`` and sensitive groups ``a``."""

    x: np.ndarray
    y: np.ndarray
    a: np.ndarray
    feature_names: list[str]
    split: str = "train"
    provenance: str = ""
    # column index -> (mean, std) once standardized
    scaling: dict | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.a = np.asarray(self.a, dtype=np.int64)
        n = len(self.y)
        if self.x.ndim != 2 or self.x.shape[0] != n or len(self.a) != n:
            raise ValueError(f"shape mismatch: x {self.x.shape}, y {self.y.shape}, a {self.a.shape}")
        if self.x.shape[1] != len(self.feature_names):
            raise ValueError("one feature name per column required")
        if not np.all(np.isfinite(self.x)):
            raise ValueError("features contain missing or non-finite values")
        for name, v in (("y", self.y), ("a", self.a)):
            if not np.all((v == 0) | (v == 1)):
                raise ValueError(f"{name} must be binary")
        if self.split not in ("train", "test"):
            raise ValueError(f"split must be 'train' or 'test', got {self.split!r}")

    def __len__(self):
        return len(self.y)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def subset(self, idx, split=None) -> "Dataset":
        return replace(
            self,
            x=self.x[idx],
            y=self.y[idx],
            a=self.a[idx],
            split=split or self.split,
            notes=dict(self.notes),
        )


def standardize(train: Dataset, test: Dataset, columns) -> tuple[Dataset, Dataset]:
    """Zero-mean/unit-variance scaling of ``columns`` using train statistics only."""
    if train.scaling is not None or test.scaling is not None:
        raise ValueError("dataset is already standardized")
    idx = [train.feature_names.index(c) if isinstance(c, str) else int(c) for c in columns]
    mean = train.x[:, idx].mean(axis=0)
    std = train.x[:, idx].std(axis=0)
    std[std == 0] = 1.0
    scaling = {int(i): (float(m), float(s)) for i, m, s in zip(idx, mean, std)}
    out = []
    for ds in (train, test):
        x = ds.x.copy()
        x[:, idx] = (x[:, idx] - mean) / std
        out.append(replace(ds, x=x, scaling=scaling, notes=dict(ds.notes)))
    return out[0], out[1]


def _one_hot(rows, categorical, categories):
    """Columns for each categorical field in ``categories`` order; unseen -> zeros."""
    n = len(rows)
    blocks, names, unseen = [], [], 0
    for col in categorical:
        cats = categories[col]
        pos = {c: i for i, c in enumerate(cats)}
        block = np.zeros((n, len(cats)))
        for r, row in enumerate(rows):
            j = pos.get(row[col])
            if j is None:
                unseen += 1
            else:
                block[r, j] = 1.0
        blocks.append(block)
        names += [f"{col}={c}" for c in cats]
    return blocks, names, unseen


def _read_adult(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != len(ADULT_COLUMNS):
                raise IngestionError(
                    f"{path}:{lineno}: expected {len(ADULT_COLUMNS)} fields, got {len(parts)}"
                )
            if "?" in parts:
                continue
            row = dict(zip(ADULT_COLUMNS, parts))
            # adult.test labels carry a trailing period
            row["income"] = row["income"].rstrip(".")
            if row["income"] not in ("<=50K", ">50K"):
                raise IngestionError(f"{path}:{lineno}: unexpected income label {row['income']!r}")
            if row["sex"] not in ("Male", "Female"):
                raise IngestionError(f"{path}:{lineno}: unexpected sex {row['sex']!r}")
            try:
                for c in ADULT_CONTINUOUS:
                    row[c] = float(row[c])
            except ValueError as exc:
                raise IngestionError(f"{path}:{lineno}: {exc}") from None
            rows.append(row)
    if not rows:
        raise IngestionError(f"{path}: no usable rows")
    return rows


def load_adult(train_path, test_path, drop=ADULT_DROP) -> tuple[Dataset, Dataset]:
    """UCI Adult with income >50K as Y and sex as A (0 = male, 1 = female).

    Rows with missing fields are dropped. Categorical fields are one-hot
    encoded with categories taken from the training file; ``sex`` is removed
    from the inputs. Continuous fields are standardized on train statistics.
    """
    splits = {"train": _read_adult(train_path), "test": _read_adult(test_path)}
    continuous = [c for c in ADULT_CONTINUOUS if c not in drop]
    categorical = [
        c
        for c in ADULT_COLUMNS
        if c not in ADULT_CONTINUOUS and c not in ("sex", "income") and c not in drop
    ]
    categories = {c: sorted({r[c] for r in splits["train"]}) for c in categorical}

    out = {}
    for split, rows in splits.items():
        cont = np.array([[r[c] for c in continuous] for r in rows], dtype=np.float64)
        blocks, names, unseen = _one_hot(rows, categorical, categories)
        if unseen:
            log.warning("adult %s: %d unseen category values encoded as all-zeros", split, unseen)
        out[split] = Dataset(
            x=np.hstack([cont] + blocks),
            y=np.array([r["income"] == ">50K" for r in rows], dtype=np.int64),
            a=np.array([r["sex"] == "Female" for r in rows], dtype=np.int64),
            feature_names=continuous + names,
            split=split,
            provenance=f"adult:{Path(train_path if split == 'train' else test_path).name}",
            notes={"unseen_categories": unseen},
        )
    return standardize(out["train"], out["test"], continuous)


COMPAS_FEATURES = [
    "age",
    "juv_fel_count",
    "juv_misd_count",
    "juv_other_count",
    "priors_count",
    "length_of_stay",
    "sex=Female",
    "c_charge_degree=F",
    "age_cat=Less than 25",
    "age_cat=25 - 45",
    "age_cat=Greater than 45",
]
COMPAS_CONTINUOUS = COMPAS_FEATURES[:6]


def _days_between(start, end):
    d0 = np.datetime64(start.split(" ")[0]) if start else None
    d1 = np.datetime64(end.split(" ")[0]) if end else None
    if d0 is None or d1 is None:
        raise ValueError("missing jail dates")
    return float((d1 - d0) / np.timedelta64(1, "D"))


def _read_compas(path):
    """ProPublica two-year file with the standard screening filters applied."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        # the file repeats some column names; the first occurrence wins
        col = {}
        for i, name in enumerate(header):
            col.setdefault(name, i)
        need = [
            "days_b_screening_arrest",
            "is_recid",
            "c_charge_degree",
            "score_text",
            "race",
            "two_year_recid",
            "age",
            "sex",
            "age_cat",
            "juv_fel_count",
            "juv_misd_count",
            "juv_other_count",
            "priors_count",
            "c_jail_in",
            "c_jail_out",
        ]
        missing = [c for c in need if c not in col]
        if missing:
            raise IngestionError(f"{path}: missing columns {missing}")
        feats, ys, as_ = [], [], []
        for row in reader:
            lineno = reader.line_num
            if len(row) != len(header):
                raise IngestionError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            g = {c: row[col[c]] for c in need}
            days = g["days_b_screening_arrest"]
            if days == "" or not -30 <= float(days) <= 30:
                continue
            if g["is_recid"] == "-1" or g["c_charge_degree"] == "O" or g["score_text"] == "N/A":
                continue
            try:
                values = [
                    float(g["age"]),
                    float(g["juv_fel_count"]),
                    float(g["juv_misd_count"]),
                    float(g["juv_other_count"]),
                    float(g["priors_count"]),
                    _days_between(g["c_jail_in"], g["c_jail_out"]),
                    float(g["sex"] == "Female"),
                    float(g["c_charge_degree"] == "F"),
                    float(g["age_cat"] == "Less than 25"),
                    float(g["age_cat"] == "25 - 45"),
                    float(g["age_cat"] == "Greater than 45"),
                ]
                y = int(g["two_year_recid"])
            except ValueError as exc:
                raise IngestionError(f"{path}:{lineno}: {exc}") from None
            if y not in (0, 1):
                raise IngestionError(f"{path}:{lineno}: two_year_recid must be 0/1")
            feats.append(values)
            ys.append(y)
            as_.append(int(g["race"] == "African-American"))
    if not ys:
        raise IngestionError(f"{path}: no rows survive filtering")
    return np.array(feats), np.array(ys), np.array(as_)


def load_compas(path, seed=COMPAS_SPLIT_SEED, train_fraction=COMPAS_TRAIN_FRACTION):
    """ProPublica COMPAS with two-year recidivism as Y.

    A = 1 for African-American defendants and 0 for everyone else. Race is
    not among the 11 input features. The split is a seeded permutation:
    the first ``round(train_fraction * n)`` rows go to train.
    """
    x, y, a = _read_compas(path)
    n = len(y)
    n_train = int(round(train_fraction * n))
    perm = np.random.default_rng(seed).permutation(n)
    full = Dataset(x, y, a, list(COMPAS_FEATURES), "train", f"compas:{Path(path).name}")
    train = full.subset(perm[:n_train], "train")
    test = full.subset(perm[n_train:], "test")
    train.notes["split_seed"] = test.notes["split_seed"] = int(seed)
    return standardize(train, test, COMPAS_CONTINUOUS)


@dataclass
class SynthSpec:
    """Gaussian blobs, one per (a, y) cell.

    ``counts[a][y]`` samples are drawn from N(means[a, y], scales[a, y]^2 I).
    """

    counts: np.ndarray
    dim: int = 2
    means: np.ndarray | None = None
    scales: np.ndarray | float = 1.0
    seed: int = 0
    label_shift: float = 1.0
    group_shift: float = 1.0

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (2, 2) or np.any(self.counts < 0):
            raise ValueError("counts must be a nonnegative 2x2 table indexed [a][y]")
        if np.count_nonzero(self.counts) < 2:
            raise ValueError("need at least two nonempty cells")
        if self.dim < 1:
            raise ValueError("dim must be positive")

    def cell_means(self) -> np.ndarray:
        if self.means is not None:
            m = np.asarray(self.means, dtype=np.float64)
            if m.shape != (2, 2, self.dim):
                raise ValueError(f"means must have shape (2, 2, {self.dim})")
            return m
        # label signal on feature 0, group signal on the last feature
        m = np.zeros((2, 2, self.dim))
        for a in (0, 1):
            for y in (0, 1):
                m[a, y, 0] += self.label_shift * (2 * y - 1)
                m[a, y, -1] += self.group_shift * (2 * a - 1)
        return m


def synth(spec: SynthSpec, split="train") -> Dataset:
    rng = np.random.default_rng(spec.seed)
    means = spec.cell_means()
    scales = np.broadcast_to(np.asarray(spec.scales, dtype=np.float64), (2, 2))
    xs, ys, as_ = [], [], []
    for a in (0, 1):
        for y in (0, 1):
            k = int(spec.counts[a, y])
            xs.append(means[a, y] + scales[a, y] * rng.standard_normal((k, spec.dim)))
            ys.append(np.full(k, y))
            as_.append(np.full(k, a))
    perm = rng.permutation(int(spec.counts.sum()))
    return Dataset(
        np.concatenate(xs)[perm],
        np.concatenate(ys)[perm],
        np.concatenate(as_)[perm],
        [f"f{i}" for i in range(spec.dim)],
        split,
        f"synth:seed={spec.seed}",
    )


def split_stats(ds: Dataset) -> dict:
    if len(ds) == 0:
        raise ValueError("empty dataset")
    br0, br1, delta = base_rates(ds)
    return {
        "n": len(ds),
        "base_rate0": br0,
        "base_rate1": br1,
        "delta_br": delta,
        "p_y1": float(ds.y.mean()),
        "p_a1": float(ds.a.mean()),
    }


def stats(train: Dataset, test: Dataset, name="") -> dict:
    """Row counts and label/group rates, reported for both splits."""
    return {
        "dataset": name,
        "n_train": len(train),
        "n_test": len(test),
        "dim": train.dim,
        "train": split_stats(train),
        "test": split_stats(test),
    }


def save_cache(ds: Dataset, path) -> None:
    """CSV ``y,a,f0..f{d-1}`` plus a JSON sidecar next to it."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", "a"] + [f"f{i}" for i in range(ds.dim)])
        for y, a, row in zip(ds.y, ds.a, ds.x):
            w.writerow([int(y), int(a)] + [repr(float(v)) for v in row])
    meta = {
        "feature_names": ds.feature_names,
        "split": ds.split,
        "provenance": ds.provenance,
        "scaling": None if ds.scaling is None else {str(k): v for k, v in ds.scaling.items()},
        "notes": ds.notes,
    }
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2), encoding="utf-8")


def load_cache(path) -> Dataset:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in r] for r in reader]
    arr = np.array(rows).reshape(-1, len(header))
    scaling = meta["scaling"]
    return Dataset(
        arr[:, 2:],
        arr[:, 0].astype(np.int64),
        arr[:, 1].astype(np.int64),
        meta["feature_names"],
        meta["split"],
        meta["provenance"],
        None if scaling is None else {int(k): tuple(v) for k, v in scaling.items()},
        meta.get("notes", {}),
    )
