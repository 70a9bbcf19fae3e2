#!/usr/bin/env python3
"""Download the tabular benchmark datasets into data/raw/<NAME>.csv.

Each output CSV has a header, numeric feature columns only, and the target
column named in data/specs/<NAME>.cfg. Categorical columns are dropped.

    python3 scripts/fetch_datasets.py            # all datasets
    python3 scripts/fetch_datasets.py DM WN      # a subset

Sources are tried in order; the first that works wins. Needs pandas, and
scikit-learn for the OpenML sources.
"""

import io
import pathlib
import subprocess
import sys
import tarfile
import tempfile
import urllib.request
import zipfile

import pandas as pd

ROOT = pathlib.Path(__file__).resolve().parent.parent
RAW = ROOT / "data" / "raw"
UCI = "https://archive.ics.uci.edu/static/public"


def fetch_url(url):
    with urllib.request.urlopen(url, timeout=60) as r:
        return r.read()


def openml(data_id, target):
    from sklearn.datasets import fetch_openml

    frame = fetch_openml(data_id=data_id, as_frame=True, parser="auto").frame
    frame = frame.rename(columns={frame.columns[-1]: target}) if target not in frame else frame
    return frame


def numeric_only(frame, target):
    feats = [c for c in frame.columns if c != target and pd.api.types.is_numeric_dtype(frame[c])]
    out = frame[feats + [target]].astype(float)
    return out.dropna()


def wine():
    blob = fetch_url(f"{UCI}/186/wine+quality.zip")
    z = zipfile.ZipFile(io.BytesIO(blob))
    parts = [pd.read_csv(z.open(n), sep=";") for n in ("winequality-red.csv", "winequality-white.csv")]
    return pd.concat(parts, ignore_index=True)


def bike():
    z = zipfile.ZipFile(io.BytesIO(fetch_url(f"{UCI}/275/bike+sharing+dataset.zip")))
    frame = pd.read_csv(z.open("hour.csv"))
    return frame.drop(columns=["instant", "dteday", "casual", "registered"])


def superconduct():
    z = zipfile.ZipFile(io.BytesIO(fetch_url(f"{UCI}/464/superconductivty+data.zip")))
    return pd.read_csv(z.open("train.csv"))


def diamonds_pydataset():
    # pydataset ships ggplot2's diamonds table; used when OpenML is unreachable.
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([sys.executable, "-m", "pip", "download", "pydataset", "--no-deps", "-d", tmp],
                       check=True, capture_output=True)
        sdist = next(pathlib.Path(tmp).glob("pydataset-*.tar.gz"))
        with tarfile.open(sdist) as outer:
            member = next(m for m in outer.getmembers() if m.name.endswith("resources.tar.gz"))
            inner = tarfile.open(fileobj=outer.extractfile(member))
            csv = inner.getmember("resources/rdata/csv/ggplot2/diamonds.csv")
            frame = pd.read_csv(inner.extractfile(csv), index_col=0)
    return frame


SOURCES = {
    "WN": ("quality", [wine]),
    "AE": ("goal", [lambda: openml(296, "goal")]),
    "BS": ("cnt", [bike, lambda: openml(42712, "cnt")]),
    "SC": ("critical_temp", [superconduct, lambda: openml(43174, "critical_temp")]),
    "EL": ("Goal", [lambda: openml(216, "Goal")]),
    "CA": ("usr", [lambda: openml(197, "usr")]),
    "DM": ("price", [lambda: openml(42225, "price"), diamonds_pydataset]),
}


def main(names):
    RAW.mkdir(parents=True, exist_ok=True)
    failed = []
    for name in names:
        target, sources = SOURCES[name]
        for src in sources:
            try:
                frame = numeric_only(src(), target)
            except Exception as e:  # try the next source
                print(f"{name}: {getattr(src, '__name__', 'source')} failed: {e}", file=sys.stderr)
                continue
            frame.to_csv(RAW / f"{name}.csv", index=False)
            print(f"{name}: {len(frame)} rows, {frame.shape[1] - 1} features -> {RAW / (name + '.csv')}")
            break
        else:
            failed.append(name)
    if failed:
        print("unavailable: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:] or list(SOURCES)))
