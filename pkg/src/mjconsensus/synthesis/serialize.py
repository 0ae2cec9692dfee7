"""Plain-text protocol documents.

Layout::

    kind = full
    tau = 1.3999999999999999
    ...
    [k_gain]
    <matrix rows>
    [l_gain]
    ...

Scalars are ``key = value`` lines before the first ``[name]`` header; each
header is followed by the rows of one matrix in the matrix file format.
Values are written with 17 significant digits, so a round trip is bit-exact.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from ..matio import format_matrix, parse_matrix
from .full_order import FullOrderProtocol
from .reduced_order import ReducedOrderProtocol

_KINDS = {"full": FullOrderProtocol, "reduced": ReducedOrderProtocol}


class ProtocolFormatError(ValueError):
    pass


def protocol_to_text(proto) -> str:
    scalars, blocks = [f"kind = {proto.kind}"], []
    for f in dataclasses.fields(proto):
        v = getattr(proto, f.name)
        if isinstance(v, np.ndarray):
            blocks.append(f"[{f.name}]\n{format_matrix(v)}")
        elif isinstance(v, bool):
            scalars.append(f"{f.name} = {str(v).lower()}")
        else:
            scalars.append(f"{f.name} = {float(v):.17g}")
    return "\n".join(scalars) + "\n" + "".join(blocks)


def protocol_from_text(text: str, source: str = "<string>"):
    scalars, blocks, current = {}, {}, None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            blocks[current] = []
        elif current is not None:
            blocks[current].append(line)
        elif "=" in line:
            key, val = (s.strip() for s in line.split("=", 1))
            scalars[key] = val
        else:
            raise ProtocolFormatError(f"{source}:{lineno}: expected 'key = value' or '[name]'")
    kind = scalars.pop("kind", None)
    if kind not in _KINDS:
        raise ProtocolFormatError(f"{source}: kind must be one of {sorted(_KINDS)}, got {kind!r}")
    cls = _KINDS[kind]
    values = {}
    for f in dataclasses.fields(cls):
        if f.name in blocks:
            values[f.name] = parse_matrix("\n".join(blocks[f.name]), f"{source}[{f.name}]")
        elif f.name in scalars:
            s = scalars[f.name]
            if f.name == "certified":
                if s.lower() not in ("true", "false"):
                    raise ProtocolFormatError(f"{source}: certified must be true or false")
                values[f.name] = s.lower() == "true"
            else:
                try:
                    values[f.name] = float(s)
                except ValueError:
                    raise ProtocolFormatError(f"{source}: {f.name} = {s!r} is not a number") from None
        elif f.default is dataclasses.MISSING:
            raise ProtocolFormatError(f"{source}: missing field {f.name!r}")
    return cls(**values)


def save_protocol(path, proto) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(protocol_to_text(proto))


def load_protocol(path):
    with open(path, encoding="utf-8") as fh:
        return protocol_from_text(fh.read(), str(path))
