"""Run configuration, config hashing and the CSV writers shared by the CLI."""

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

SCHEMA = 1


@dataclass
class RunConfig:
    schema: int = SCHEMA
    case: str = None
    target: dict = None
    crossings: int = None
    crossings_range: tuple = (1, 6)
    sign: int = 1
    dt: float = 1e-3
    grid: list = None
    segments: int = 128
    B: tuple = (50.0, 100.0, 500.0, 1000.0)
    l_max: int = 50
    out: str = "out"
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.schema != SCHEMA:
            raise ValueError(f"unsupported config schema {self.schema!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.sign not in (1, -1, 0):
            raise ValueError("sign must be 1, -1, or 0 for both")
        lo, hi = self.crossings_range
        if not 1 <= lo <= hi:
            raise ValueError("crossings_range must satisfy 1 <= lo <= hi")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("crossings_range", "B"):
            if key in d and d[key] is not None:
                d[key] = tuple(d[key])
        return cls(**d)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        d = asdict(self)
        d["crossings_range"] = list(self.crossings_range)
        d["B"] = list(self.B)
        return d

    def hash_for(self, command):
        """Hash of the settings that determine a command's output (the output directory excluded)."""
        d = self.to_dict()
        d.pop("out")
        d["command"] = command
        return config_hash(d)


def config_hash(obj):
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"not serializable: {type(x).__name__}")


def write_csv(path, columns, rows, chash):
    """Plain CSV with a leading '# config_hash=...' comment; floats written with repr."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={chash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def gnuplot_script(csv_path, xcol, ycols, title):
    lines = [
        "set datafile separator ','",
        f"set title '{title}'",
        "set key autotitle columnhead",
        "plot " + ", ".join(f"'{csv_path}' using {xcol}:{y} with lines" for y in ycols),
        "pause -1",
    ]
    return "\n".join(lines) + "\n"
