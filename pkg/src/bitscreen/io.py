"""Reading designs and responses; writing screening results.

Formats
-------
* dense design: CSV or TSV, rows are samples, optional header row of
  column names (detected when any first-row cell is non-numeric);
* sparse design: Matrix Market coordinate format (``.mtx``), 1-based;
* response: one number per line, blank lines ignored.

Floats in written results carry 12 significant digits.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .exceptions import DimensionError, InputError

FLOAT_FORMAT = "{:.12g}"

FORMATS_HELP = """\
Input formats
  design (-X)   CSV (.csv) or TSV (.tsv/.tab/.txt with tabs); rows are samples,
                columns are covariates. An optional first row of column names
                is detected automatically. Matrix Market coordinate files
                (.mtx, 1-based indices) are read as sparse and never densified.
  response (-y) plain text, one value per line; blank lines are skipped.
Output formats
  JSON          {"path", "pi_trace", "selected", "stop_reason", "timings", ...};
                floats carry 12 significant digits.
  CSV           rank,column_index,column_name,log_posterior (one row per path step).
  simulate      CSV columns setting,method,rule,TPR,CP,mean_size,median_size,seconds,
                replications,failures; JSON mirrors the rows plus the config.
Simulation config (key = value under an [experiment] section)
  setting       iid | compound | ar1 | factor | group | extreme | sparse-factor
  n, p          sample size and number of covariates
  rho           correlation for compound / ar1 (default 0.5)
  k_factors     factors for factor / sparse-factor (defaults 10 / 5)
  r_squared     theoretical R^2 in (0, 1) (default 0.7)
  n_true        size of the truth (leading columns); beta_value its coefficient
  replications  number of replications; seed master seed
  methods       comma list of bits[:p/n|nlogn/p|n/p|<number>], bits-all, sis, holp, fr
  rules         comma list of n, pp, ebic
  w             prior inclusion probability for the PP rule (default 0.1)
"""


def _delimiter(path: Path, first_line: str) -> str:
    if path.suffix.lower() in (".tsv", ".tab"):
        return "\t"
    return "\t" if "\t" in first_line else ","


def read_dense(path) -> tuple[np.ndarray, list[str] | None]:
    """Read a CSV/TSV design; returns the matrix and the header, if any."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read design file {path}: {exc.strerror}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputError(f"design file {path} is empty")
    rows = list(csv.reader(lines, delimiter=_delimiter(path, lines[0])))
    header = None
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise InputError(f"design file {path} has no data rows")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    offset = 2 if header else 1
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InputError(f"{path}: row {i + offset} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise InputError(f"{path}: row {i + offset}, column {j + 1}: cannot parse {cell!r} as a number") from None
    if header is not None and len(header) != width:
        raise InputError(f"{path}: header has {len(header)} names but rows have {width} fields")
    return out, header


def read_design(path):
    """Dense array (CSV/TSV) or CSC matrix (Matrix Market), plus column names."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"design file not found: {path}")
    if path.suffix.lower() == ".mtx":
        try:
            M = scipy.io.mmread(str(path))
        except Exception as exc:
            raise InputError(f"{path}: malformed Matrix Market file ({exc})") from exc
        return sp.csc_matrix(M, dtype=np.float64), None
    return read_dense(path)


def read_response(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read response file {path}: {exc.strerror or exc}") from exc
    vals = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        try:
            vals.append(float(s))
        except ValueError:
            raise InputError(f"{path}: line {lineno}: cannot parse {s!r} as a number") from None
    if not vals:
        raise InputError(f"response file {path} is empty")
    return np.asarray(vals)


def check_shapes(Z, y) -> None:
    if Z.shape[0] != y.shape[0]:
        raise DimensionError(f"design has {Z.shape[0]} rows but response has {y.shape[0]} values")


def write_dense(path, Z, header=None, delimiter=",") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        if header:
            w.writerow(header)
        for row in np.asarray(Z):
            w.writerow([repr(float(v)) for v in row])


def write_mtx(path, Z) -> None:
    scipy.io.mmwrite(str(path), sp.coo_matrix(Z), precision=17)


def write_response(path, y) -> None:
    Path(path).write_text("".join(f"{float(v)!r}\n" for v in y))


def round_floats(obj):
    """Recursively round floats to 12 significant digits."""
    if isinstance(obj, float):
        return float(FLOAT_FORMAT.format(obj)) if np.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    return obj


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(round_floats(payload), indent=2) + "\n")


def write_path_csv(path, order, log_posteriors=None, names=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "column_index", "column_name", "log_posterior"])
        for rank, j in enumerate(order, 1):
            name = names[j] if names else ""
            lp = ""
            if log_posteriors is not None and rank - 1 < len(log_posteriors):
                lp = FLOAT_FORMAT.format(log_posteriors[rank - 1])
            w.writerow([rank, int(j), name, lp])
