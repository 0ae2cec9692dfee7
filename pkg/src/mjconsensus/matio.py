"""Plain-text matrix files: one row per line, whitespace-separated decimals."""

from __future__ import annotations

import numpy as np


def parse_matrix(text: str, source: str = "<string>") -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([float(tok) for tok in line.split()])
        except ValueError as exc:
            raise ValueError(f"{source}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{source}: empty matrix")
    if len({len(r) for r in rows}) != 1:
        raise ValueError(f"{source}: ragged rows")
    return np.array(rows, dtype=float)


def load_matrix(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return parse_matrix(fh.read(), str(path))


def format_matrix(m) -> str:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    # 17 significant digits round-trip IEEE doubles exactly
    return "".join(" ".join(f"{v:.17g}" for v in row) + "\n" for row in m)


def save_matrix(path, m) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_matrix(m))
