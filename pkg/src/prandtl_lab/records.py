"""Per-station march records shared by both solvers, plus their CSV schema."""

import ast
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError

RUN_HEADER = "# prandtl-run v1"
COLUMNS = ("x", "tau_wall", "min_uyy", "max_uyy", "continuation_margin", "dx")

SEPARATED = "separated"
REACHED_X_END = "reached_x_end"
STEP_UNDERFLOW = "step_underflow"
INVARIANT_VIOLATION = "invariant_violation"
TERMINATIONS = (SEPARATED, REACHED_X_END, STEP_UNDERFLOW, INVARIANT_VIOLATION)


@dataclass
class RunRecord:
    """Station series (x, tau_wall, curvature extrema, margin, dx) plus
    termination metadata and optional stored snapshots."""

    stations: np.ndarray          # shape (n, 6), columns as in COLUMNS
    termination: str
    solver: str = "vm"
    label: str = ""
    scenario_hash: str = ""
    snapshots: list = field(default_factory=list, repr=False)
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.stations = np.asarray(self.stations, dtype=float)
        if self.stations.ndim != 2 or self.stations.shape[1] != len(COLUMNS):
            raise ModelError("stations must be an (n, 6) array")
        if self.termination not in TERMINATIONS:
            raise ModelError(f"unknown termination {self.termination!r}")
        if np.any(np.diff(self.x) <= 0):
            raise ModelError("station x values must be strictly increasing")

    @property
    def x(self):
        return self.stations[:, 0]

    @property
    def tau(self):
        return self.stations[:, 1]

    @property
    def min_uyy(self):
        return self.stations[:, 2]

    @property
    def max_uyy(self):
        return self.stations[:, 3]

    @property
    def margin(self):
        return self.stations[:, 4]

    @property
    def dx(self):
        return self.stations[:, 5]

    @property
    def tau0(self):
        return float(self.stations[0, 1])

    @property
    def separated(self):
        return self.termination == SEPARATED

    def x_last(self):
        return float(self.stations[-1, 0])


def write_record_csv(record, path):
    with open(path, "w") as fh:
        fh.write(RUN_HEADER + "\n")
        fh.write(f"# solver={record.solver} termination={record.termination}\n")
        fh.write(f"# label={record.label}\n")
        fh.write(f"# scenario={record.scenario_hash}\n")
        for key in sorted(record.meta):
            fh.write(f"# meta {key}={record.meta[key]!r}\n")
        fh.write(",".join(COLUMNS) + "\n")
        for row in record.stations:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_record_csv(path):
    meta = {}
    solver = "vm"
    termination = None
    label = ""
    scenario = ""
    rows = []
    with open(path) as fh:
        first = fh.readline().strip()
        if first != RUN_HEADER:
            raise ModelError(f"not a run record file (header {first!r})")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("meta "):
                    key, val = body[5:].split("=", 1)
                    try:
                        meta[key] = ast.literal_eval(val)
                    except (ValueError, SyntaxError):
                        meta[key] = val
                elif body.startswith("label="):
                    label = body[len("label="):]
                elif body.startswith("scenario="):
                    scenario = body[len("scenario="):]
                else:
                    for tok in body.split():
                        if "=" in tok:
                            k, v = tok.split("=", 1)
                            if k == "solver":
                                solver = v
                            elif k == "termination":
                                termination = v
                continue
            if line.startswith("x,"):
                continue
            rows.append([float(tok) for tok in line.split(",")])
    if termination is None:
        raise ModelError("run record missing termination metadata")
    return RunRecord(np.asarray(rows), termination, solver=solver, label=label,
                     scenario_hash=scenario, meta=meta)
