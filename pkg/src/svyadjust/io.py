"""File formats owned by the CLI: delimited microdata, draws matrices with
a JSON metadata sidecar, and simulation summary tables.

Draws round-trip bit-identically: values are written with 17 significant
digits.  The sidecar carries the seed, a config hash, and parameter names;
its timestamp field is the only part of an output that varies between
identical runs.
"""

import hashlib
import json
from datetime import datetime, timezone

import numpy as np
import pandas as pd

from .errors import ConfigError, ParseError
from .model import SurveySample
from .sampler import DrawsMatrix

FLOAT_FMT = "%.17g"


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _sidecar_path(path: str) -> str:
    return str(path) + ".meta.json"


def write_draws(path, draws: DrawsMatrix, seed, config: dict) -> None:
    header = ",".join(draws.param_names)
    np.savetxt(path, draws.draws, delimiter=",", comments="",
               header=header, fmt=FLOAT_FMT, newline="\n")
    diag = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
            for k, v in draws.diagnostics.items()}
    meta = {
        "seed": seed,
        "config_hash": config_hash(config),
        "param_names": draws.param_names,
        "status": draws.status,
        "diagnostics": diag,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    with open(_sidecar_path(path), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")


def read_draws(path) -> DrawsMatrix:
    try:
        with open(path, encoding="utf-8") as f:
            header = f.readline().strip()
            if not header:
                raise ParseError(f"{path}: empty draws file")
            names = header.split(",")
            data = np.loadtxt(f, delimiter=",", ndmin=2)
    except OSError as e:
        raise ParseError(f"{path}: {e}") from e
    except ValueError as e:
        raise ParseError(f"{path}: malformed draws file: {e}") from e
    if data.shape[1] != len(names):
        raise ParseError(f"{path}: {data.shape[1]} columns but "
                         f"{len(names)} header names")
    meta = {}
    try:
        with open(_sidecar_path(path), encoding="utf-8") as f:
            meta = json.load(f)
    except OSError:
        pass  # sidecar is optional on read
    except json.JSONDecodeError as e:
        raise ParseError(f"{_sidecar_path(path)}: {e}") from e
    return DrawsMatrix(draws=data, param_names=names,
                       diagnostics=meta.get("diagnostics", {}),
                       status=meta.get("status", "ok"))


def read_microdata(path, outcome, covariates, weight,
                   stratum=None, psu=None) -> SurveySample:
    """Build a SurveySample from a delimited text file with a header row.

    Columns are referenced by name.  When stratum/psu are unmapped, every
    row becomes its own PSU in a single stratum.
    """
    try:
        # round_trip parsing so written values come back bit-identical
        df = pd.read_csv(path, float_precision="round_trip")
    except OSError as e:
        raise ParseError(f"{path}: {e}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"{path}: {e}") from e

    needed = [outcome, *covariates, weight]
    if stratum is not None:
        needed.append(stratum)
    if psu is not None:
        needed.append(psu)
    missing = [c for c in needed if c not in df.columns]
    if missing:
        raise ConfigError(f"{path}: missing column(s) {missing}; "
                          f"available: {list(df.columns)}")
    bad = df[needed].isna()
    if bad.any().any():
        row = int(bad.any(axis=1).idxmax())
        raise ParseError(f"{path}: missing value at data row {row}")

    def as_float(col):
        try:
            return df[col].to_numpy(dtype=float)
        except (TypeError, ValueError) as e:
            raise ParseError(f"{path}: column {col!r} is not numeric: {e}") \
                from e

    n = len(df)
    X = np.column_stack([np.ones(n)] + [as_float(c) for c in covariates])
    return SurveySample(
        y=as_float(outcome),
        X=X,
        weight=as_float(weight),
        stratum_id=(df[stratum].to_numpy() if stratum is not None
                    else np.zeros(n, dtype=int)),
        psu_id=(df[psu].to_numpy() if psu is not None
                else np.arange(n)),
    )


def write_microdata(path, sample: SurveySample, covariate_names=None) -> None:
    d = sample.d - 1
    if covariate_names is None:
        covariate_names = [f"x{j + 1}" for j in range(d)]
    cols = {"y": sample.y}
    for j, name in enumerate(covariate_names):
        cols[name] = sample.X[:, j + 1]
    cols["weight"] = sample.weight
    cols["stratum"] = sample.stratum_id
    cols["psu"] = sample.psu_id
    pd.DataFrame(cols).to_csv(path, index=False, lineterminator="\n",
                              float_format="%.17g")


def write_summary(path, summaries) -> None:
    rows = [s.to_row() for s in summaries]
    pd.DataFrame(rows).to_csv(path, index=False, lineterminator="\n",
                              float_format="%.6g")


def read_summary(path) -> pd.DataFrame:
    try:
        return pd.read_csv(path)
    except OSError as e:
        raise ParseError(f"{path}: {e}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"{path}: {e}") from e
