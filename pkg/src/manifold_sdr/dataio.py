"""Dataset CSV format: predictors plus manifold responses.

Layout: one commented metadata line, a header row, then one sample per row.

    # manifold=spd m=2
    id,x1,x2,y11,y21,y22
    0,0.12,0.98,1.0,0.3,1.5

SPD responses store the lower triangle of Y itself (not its logarithm) in
row-wise order; sphere responses store the three coordinates after a
``# manifold=sphere`` line.  Floats are written with full repr precision so
write/read round-trips are exact.
"""

import csv

import numpy as np

from .errors import DatasetError
from .manifolds import sym_dim, unvecs

SPHERE_NORM_TOL = 1e-8


def _y_columns(manifold, m):
    if manifold == "sphere":
        return ["y1", "y2", "y3"]
    r, c = np.tril_indices(m)
    return [f"y{k + 1}{l + 1}" for k, l in zip(r, c)]


def write_dataset(path, X, Y, manifold, m=None, ids=None):
    """Write predictors and responses in the dataset CSV format."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if manifold == "sphere":
        Y = np.asarray(Y, dtype=float)
        if Y.shape != (n, 3):
            raise DatasetError(f"sphere responses must be (n, 3), got {Y.shape}")
        meta = "# manifold=sphere"
        rows_y = Y
    elif manifold == "spd":
        Y = np.asarray(Y, dtype=float)
        if Y.ndim != 3 or Y.shape[0] != n or Y.shape[1] != Y.shape[2]:
            raise DatasetError(f"SPD responses must be (n, m, m), got {Y.shape}")
        m = Y.shape[1] if m is None else m
        meta = f"# manifold=spd m={m}"
        r, c = np.tril_indices(m)
        rows_y = Y[:, r, c]
    else:
        raise DatasetError(f"unknown manifold {manifold!r}, expected 'spd' or 'sphere'")
    if ids is None:
        ids = np.arange(n)
    header = ["id"] + [f"x{k + 1}" for k in range(p)] + _y_columns(manifold, m)
    with open(path, "w", newline="") as fh:
        fh.write(meta + "\n")
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(n):
            w.writerow(
                [ids[i]]
                + [repr(float(v)) for v in X[i]]
                + [repr(float(v)) for v in rows_y[i]]
            )


def _parse_meta(line):
    tokens = line.lstrip("#").split()
    fields = {}
    for tok in tokens:
        if "=" not in tok:
            raise DatasetError(f"malformed metadata token {tok!r}")
        key, value = tok.split("=", 1)
        fields[key] = value
    manifold = fields.get("manifold")
    if manifold == "sphere":
        return "sphere", None
    if manifold == "spd":
        try:
            m = int(fields["m"])
        except (KeyError, ValueError):
            raise DatasetError("spd metadata line must carry m=<matrix size>") from None
        if m < 1:
            raise DatasetError(f"matrix size must be positive, got m={m}")
        return "spd", m
    raise DatasetError(
        f"unknown manifold tag {manifold!r} in metadata line, expected spd or sphere"
    )


def read_dataset(path):
    """Read a dataset CSV; returns (X, Y, metadata).

    SPD rows are rebuilt into full symmetric matrices and checked for
    positive definiteness; sphere rows are checked for unit norm (within
    1e-8) and renormalized exactly.
    """
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise DatasetError("first line must be a '# manifold=...' metadata line")
        manifold, m = _parse_meta(first.strip())
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError("missing header row") from None
        n_y = 3 if manifold == "sphere" else sym_dim(m)
        p = len(header) - 1 - n_y
        if p < 1:
            raise DatasetError(
                f"header has {len(header)} columns, too few for any predictor"
            )
        expected = ["id"] + [f"x{k + 1}" for k in range(p)] + _y_columns(manifold, m)
        for got, want in zip(header, expected):
            if got.strip() != want:
                raise DatasetError(f"unexpected column {got!r}, expected {want!r}")

        ids, xs, ys = [], [], []
        for lineno, row in enumerate(reader, start=3):
            if not row:
                continue
            if len(row) != len(expected):
                raise DatasetError(
                    f"row at line {lineno} has {len(row)} columns, expected {len(expected)}"
                )
            try:
                values = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise DatasetError(f"row at line {lineno}: {exc}") from None
            ids.append(row[0])
            xs.append(values[:p])
            ys.append(values[p:])

    if not xs:
        raise DatasetError("dataset has no sample rows")
    X = np.asarray(xs, dtype=float)
    raw = np.asarray(ys, dtype=float)
    if manifold == "sphere":
        norms = np.linalg.norm(raw, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > SPHERE_NORM_TOL)
        if bad.size:
            i = int(bad[0])
            raise DatasetError(
                f"sample {i}: sphere response has norm {norms[i]:.9f}, expected 1"
            )
        Y = raw / norms[:, None]
    else:
        Y = np.stack([unvecs(v, m) for v in raw])
        for i, S in enumerate(Y):
            smallest = float(np.linalg.eigvalsh(S)[0])
            if smallest <= 0.0:
                raise DatasetError(
                    f"sample {i}: response not positive definite "
                    f"(smallest eigenvalue {smallest:.6e})"
                )
    meta = {"manifold": manifold, "m": m, "ids": ids}
    return X, Y, meta
