"""JSON problem files and deterministic report serialization."""
import json
import math
from dataclasses import dataclass, fields

from .errors import ProblemSyntaxError, SchemaError

_SET_FIELDS = {
    "whole_space": {},
    "box": {"lo": "vector", "hi": "vector"},
    "ball": {"center": "vector", "radius": "number"},
    "halfspace": {"normal": "vector", "offset": "number"},
    "affine": {"point": "vector", "directions": "matrix_cols"},
}


@dataclass
class ProblemFile:
    """Validated problem file; arrays are nested lists of floats.

    ``frame`` holds one vector per row.  ``K`` defaults to the identity when
    absent; ``lambda_`` (JSON key ``"lambda"``) is the bilinear-form matrix
    for ``vi-solve`` and defaults to the frame operator there.
    """

    dimension: int
    frame: list
    K: list = None
    P: list = None
    a: list = None
    b: list = None
    c: list = None
    f0: list = None
    lambda_: list = None
    convex_set: dict = None
    index_set: list = None
    tol: float = None
    max_iter: int = None

    @property
    def count(self):
        return len(self.frame)

    def k_or_identity(self):
        if self.K is not None:
            return self.K
        n = self.dimension
        return [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]

    def to_dict(self):
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is not None:
                out["lambda" if f.name == "lambda_" else f.name] = value
        return out


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _number(x, path):
    if not _is_number(x):
        raise SchemaError(path, f"expected a number, got {type(x).__name__}")
    x = float(x)
    if not math.isfinite(x):
        raise SchemaError(path, "number must be finite")
    return x


def _vector(x, length, path):
    if not isinstance(x, list):
        raise SchemaError(path, f"expected an array of {length} numbers")
    if length is not None and len(x) != length:
        raise SchemaError(path, f"expected {length} numbers, got {len(x)}")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(x)]


def _matrix(x, rows, cols, path):
    if not isinstance(x, list) or (rows is not None and len(x) != rows) or not x:
        want = f"{rows}x{cols}" if rows is not None else f"rows of {cols}"
        raise SchemaError(path, f"expected a {want} array")
    return [_vector(r, cols, f"{path}[{i}]") for i, r in enumerate(x)]


def _convex_set(x, n, path):
    if not isinstance(x, dict):
        raise SchemaError(path, "expected an object with a 'kind' field")
    kind = x.get("kind")
    if kind not in _SET_FIELDS:
        raise SchemaError(f"{path}.kind", f"expected one of {sorted(_SET_FIELDS)}, got {kind!r}")
    wanted = _SET_FIELDS[kind]
    out = {"kind": kind}
    for key in x:
        if key != "kind" and key not in wanted:
            raise SchemaError(f"{path}.{key}", f"unexpected field for kind {kind!r}")
    for key, shape in wanted.items():
        sub = f"{path}.{key}"
        if key not in x:
            if key == "directions":
                out[key] = []
                continue
            raise SchemaError(sub, "missing field")
        if shape == "vector":
            out[key] = _vector(x[key], n, sub)
        elif shape == "number":
            out[key] = _number(x[key], sub)
        else:
            # one direction per row of length n
            out[key] = [] if x[key] == [] else _matrix(x[key], None, n, sub)
    return out


def validate_problem(data):
    """Turn a decoded JSON object into a :class:`ProblemFile` or raise ``SchemaError``."""
    if not isinstance(data, dict):
        raise SchemaError("$", "top level must be a JSON object")
    known = {"lambda" if f.name == "lambda_" else f.name for f in fields(ProblemFile)}
    for key in data:
        if key not in known:
            raise SchemaError(key, "unknown field")
    if "dimension" not in data:
        raise SchemaError("dimension", "missing field")
    n = data["dimension"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise SchemaError("dimension", "expected a positive integer")
    if "frame" not in data:
        raise SchemaError("frame", "missing field")
    frame = _matrix(data["frame"], None, n, "frame")
    m = len(frame)
    pf = ProblemFile(dimension=n, frame=frame)
    for key in ("K", "P"):
        if key in data:
            setattr(pf, key, _matrix(data[key], n, n, key))
    if "lambda" in data:
        pf.lambda_ = _matrix(data["lambda"], n, n, "lambda")
    for key in ("a", "b", "c"):
        if key in data:
            setattr(pf, key, _vector(data[key], m, key))
    if "f0" in data:
        pf.f0 = _vector(data["f0"], n, "f0")
    if "convex_set" in data:
        pf.convex_set = _convex_set(data["convex_set"], n, "convex_set")
    if "index_set" in data:
        idx = data["index_set"]
        if not isinstance(idx, list) or not all(
                isinstance(i, int) and not isinstance(i, bool) for i in idx):
            raise SchemaError("index_set", "expected an array of integers")
        for pos, i in enumerate(idx):
            if not 0 <= i < m:
                raise SchemaError(f"index_set[{pos}]", f"index {i} outside 0..{m - 1}")
        pf.index_set = list(idx)
    if "tol" in data:
        tol = _number(data["tol"], "tol")
        if tol <= 0:
            raise SchemaError("tol", "must be positive")
        pf.tol = tol
    if "max_iter" in data:
        mi = data["max_iter"]
        if not isinstance(mi, int) or isinstance(mi, bool) or mi < 1:
            raise SchemaError("max_iter", "expected a positive integer")
        pf.max_iter = mi
    return pf


def _reject_constant(name):
    raise ValueError(f"non-finite constant {name} is not allowed")


def parse_problem_text(text):
    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ProblemSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    except ValueError as exc:
        raise ProblemSyntaxError(str(exc), 0, 0) from None
    return validate_problem(data)


def parse_problem(path):
    """Read and validate a UTF-8 JSON problem file (``OSError`` if unreadable)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ProblemSyntaxError(f"file is not UTF-8 ({exc.reason})", 1, exc.start + 1) from None
    return parse_problem_text(text)


def dump_problem(pf):
    return dumps(pf.to_dict())


# --- deterministic JSON -------------------------------------------------------

def _plain(obj):
    """Convert numpy scalars/arrays (and tuples) to plain Python containers."""
    if hasattr(obj, "tolist") and not isinstance(obj, (str, bytes)):
        return _plain(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _format_float(x):
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if s == "-0":
        s = "0"
    return s


def _emit(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end_pad = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(f"{pad}{json.dumps(k)}: ")
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end_pad + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list)) for v in obj):
            out.append("[")
            for i, v in enumerate(obj):
                _emit(v, indent, level + 1, out)
                if i < len(obj) - 1:
                    out.append(", ")
            out.append("]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end_pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with insertion-ordered keys and 17-significant-digit floats.

    Non-finite floats become ``null``.
    """
    out = []
    _emit(_plain(obj), indent, 0, out)
    return "".join(out) + "\n"
