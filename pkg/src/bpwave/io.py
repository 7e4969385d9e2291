"""Run configuration and on-disk series.

Config files are INI with three flat sections::

    [run]
    scenario = flat-gaussian
    system = bpw
    stride = 100
    s_list = 0, 1
    seed = 0

    [grid]
    L = 64
    M = 512

    [params]
    eps = 0.1
    mu = 0.1
    dt = 0.001
    t_end = 1.0

Every key is optional except ``run.scenario``; missing values come from the
scenario. Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import os
import platform
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bathymetry import total_height
from .diagnostics import DiagnosticsRecord
from .dynamics import Trajectory
from .kernels import BACKEND

OUTPUT_ROOT_ENV = "BPWAVE_OUTPUT_ROOT"

SCHEMA = {
    "run": {"scenario": str, "system": str, "stride": int, "s_list": str, "seed": int, "output": str},
    "grid": {"L": float, "M": int},
    "params": {"eps": float, "mu": float, "beta": float, "nu": float, "h0": float, "dt": float, "t_end": float},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: str
    system: str | None = None
    stride: int = 100
    s_list: tuple = (0.0, 1.0)
    seed: int = 0
    output: str | None = None
    grid: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    source_text: str = ""

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
        cp.optionxform = str  # keep "L" and "M" as written
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        values: dict = {}
        for section in cp.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]; allowed: {', '.join(SCHEMA)}")
            for key, raw in cp.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key {section}.{key}")
                try:
                    values[(section, key)] = SCHEMA[section][key](raw.strip())
                except ValueError as exc:
                    raise ConfigError(f"{section}.{key}: cannot parse {raw!r}") from exc
        if ("run", "scenario") not in values:
            raise ConfigError("run.scenario is required")
        run = {k: v for (s, k), v in values.items() if s == "run"}
        s_list = run.pop("s_list", None)
        cfg = cls(
            scenario=run.pop("scenario"),
            grid={k: v for (s, k), v in values.items() if s == "grid"},
            params={k: v for (s, k), v in values.items() if s == "params"},
            source_text=text,
            **run,
        )
        if s_list is not None:
            try:
                cfg.s_list = tuple(float(x) for x in s_list.split(",") if x.strip())
            except ValueError as exc:
                raise ConfigError(f"run.s_list: cannot parse {s_list!r}") from exc
        if cfg.stride < 1:
            raise ConfigError("run.stride must be >= 1")
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.parse(text)

    def to_text(self) -> str:
        if self.source_text:
            return self.source_text
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        run = {"scenario": self.scenario, "stride": str(self.stride), "seed": str(self.seed),
               "s_list": ", ".join(f"{s:g}" for s in self.s_list)}
        if self.system:
            run["system"] = self.system
        cp["run"] = run
        if self.grid:
            cp["grid"] = {k: repr(v) for k, v in self.grid.items()}
        if self.params:
            cp["params"] = {k: repr(v) for k, v in self.params.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def as_dict(self) -> dict:
        return {"scenario": self.scenario, "system": self.system, "stride": self.stride,
                "s_list": list(self.s_list), "seed": self.seed, "grid": self.grid, "params": self.params}


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "bpwave-output"))


def atomic_write(path, data: str | bytes) -> None:
    """Write to a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v: float) -> str:
    return "%.17g" % v


def diagnostics_csv(records, s_list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DiagnosticsRecord.header(s_list))
    for r in records:
        w.writerow([_fmt(v) for v in r.row()])
    return buf.getvalue()


def snapshot_csv(traj: Trajectory, state) -> str:
    h = total_height(state.zeta, traj.bath, traj.params.eps)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "zeta", "u", "h"])
    for row in zip(traj.grid.x, state.zeta, state.u, h):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_series(traj: Trajectory, directory, config: RunConfig | None = None, extra_meta: dict | None = None) -> dict:
    """Write ``diagnostics.csv``, ``snapshots/t_<index>.csv``, ``meta.json`` and ``config.ini``.

    ``diagnostics.csv`` has one row per time step; the record of the initial
    state goes to ``meta.json`` under ``initial_record``. Snapshot indices
    count time steps, zero-padded to six digits.
    """
    d = Path(directory)
    files = {}
    atomic_write(d / "diagnostics.csv", diagnostics_csv(traj.records[1:], traj.s_list))
    files["diagnostics"] = str(d / "diagnostics.csv")
    dt = traj.params.dt
    for st in traj.states:
        idx = int(round(st.t / dt))
        name = d / "snapshots" / f"t_{idx:06d}.csv"
        atomic_write(name, snapshot_csv(traj, st))
    files["snapshots"] = str(d / "snapshots")
    meta = {
        "version": __version__,
        "backend": BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "system": traj.kind.value,
        "bathymetry": traj.bath.name,
        "grid": {"L": traj.grid.L, "M": traj.grid.M},
        "params": {k: getattr(traj.params, k) for k in ("eps", "mu", "beta", "nu", "h0", "dt", "t_end")},
        "s_list": list(traj.s_list),
        "seed": config.seed if config else 0,
        "config": config.as_dict() if config else None,
        "initial_record": dict(zip(DiagnosticsRecord.header(traj.s_list), traj.records[0].row())) if traj.records else None,
    }
    if extra_meta:
        meta.update(extra_meta)
    atomic_write(d / "meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    files["meta"] = str(d / "meta.json")
    if config is not None:
        atomic_write(d / "config.ini", config.to_text())
        files["config"] = str(d / "config.ini")
    return files


def read_snapshot(path) -> dict:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return {"x": data[:, 0], "zeta": data[:, 1], "u": data[:, 2], "h": data[:, 3]}


def read_diagnostics(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))


def write_report(directory, name: str, payload: dict) -> Path:
    path = Path(directory) / name
    atomic_write(path, json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
