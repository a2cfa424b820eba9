"""Flat key=value run configuration.

One key per line, ``#`` starts a comment, blank lines are ignored. For the
sweep command ``a`` and ``d`` may be comma-separated lists. Every problem is
collected and reported together with its key and line number.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .errors import ConfigError

COMMANDS = ("cone-info", "leaf", "profile", "solve", "analyze", "sweep")

DEFAULTS = {
    "i": 4,
    "j": 4,
    "a": 1.0,
    "d": 20.0,
    "delta": 0.1,
    "tol": 1e-6,
    "max_iter": 200,
    "lambda_star": 4.0,
    "epsilon_cutoff": 0.1,
    "fit_window_lo": 5.0,
    "fit_window_hi": 15.0,
    "seed": 0,
}

INT_KEYS = {"i", "j", "max_iter", "seed"}
LIST_KEYS = {"a", "d"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    i: int = DEFAULTS["i"]
    j: int = DEFAULTS["j"]
    a: tuple = (DEFAULTS["a"],)
    d: tuple = (DEFAULTS["d"],)
    delta: float = DEFAULTS["delta"]
    tol: float = DEFAULTS["tol"]
    max_iter: int = DEFAULTS["max_iter"]
    lambda_star: float = DEFAULTS["lambda_star"]
    epsilon_cutoff: float = DEFAULTS["epsilon_cutoff"]
    fit_window_lo: float = DEFAULTS["fit_window_lo"]
    fit_window_hi: float = DEFAULTS["fit_window_hi"]
    seed: int = DEFAULTS["seed"]
    output_dir: str = "."
    explicit: tuple = field(default=(), compare=False)

    @property
    def fit_window(self):
        return (self.fit_window_lo, self.fit_window_hi)

    def echo(self):
        out = asdict(self)
        out.pop("explicit")
        out.pop("output_dir")
        out["a"] = list(self.a)
        out["d"] = list(self.d)
        return out


def _number(raw, key):
    if key in INT_KEYS:
        val = int(raw)
    else:
        val = float(raw)
        if not math.isfinite(val):
            raise ValueError("not finite")
    return val


def parse_config(text, command=None, output_dir="."):
    """Parse and validate; raises ConfigError listing every problem found."""
    errors = []
    values = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected key=value, got {line!r}")
            continue
        key, val = (p.strip() for p in line.split("=", 1))
        if key in lines:
            errors.append(f"line {lineno}: key '{key}' repeated (first on line {lines[key]})")
            continue
        lines[key] = lineno
        if key == "command":
            values[key] = val
            continue
        if key not in DEFAULTS:
            errors.append(f"line {lineno}: unknown key '{key}'")
            continue
        parts = [p.strip() for p in val.split(",")] if key in LIST_KEYS else [val]
        try:
            nums = [_number(p, key) for p in parts]
        except ValueError:
            kind = "integer" if key in INT_KEYS else "number"
            errors.append(f"line {lineno}: key '{key}': cannot parse {val!r} as {kind}")
            continue
        values[key] = tuple(nums) if key in LIST_KEYS else nums[0]

    file_cmd = values.pop("command", None)
    if command is None:
        command = file_cmd
    elif file_cmd is not None and file_cmd != command:
        errors.append(f"line {lines['command']}: key 'command': file says {file_cmd!r} "
                      f"but {command!r} was requested")
    if command is None:
        errors.append("key 'command': missing")
    elif command not in COMMANDS:
        where = f"line {lines['command']}: " if "command" in lines else ""
        errors.append(f"{where}key 'command': unknown command {command!r}")

    def err(key, msg):
        where = f"line {lines[key]}: " if key in lines else ""
        errors.append(f"{where}key '{key}': {msg}")

    merged = {k: values.get(k, DEFAULTS[k]) for k in DEFAULTS}
    for key in LIST_KEYS:
        if not isinstance(merged[key], tuple):
            merged[key] = (merged[key],)
        if len(merged[key]) > 1 and command != "sweep":
            err(key, "lists are only allowed for the sweep command")

    for key in ("i", "j"):
        if merged[key] < 2:
            err(key, f"{key} >= 2 required, got {merged[key]}")
    if not 0 < merged["delta"] <= 0.2:
        err("delta", f"delta <= 0.2 and > 0 required, got {merged['delta']}")
    if any(d < 10 for d in merged["d"]):
        err("d", f"d >= 10 required, got {list(merged['d'])}")
    if command == "sweep" and any(b <= a for a, b in zip(merged["d"], merged["d"][1:])):
        err("d", "d list must be strictly increasing")
    if merged["tol"] <= 0:
        err("tol", f"tol > 0 required, got {merged['tol']}")
    if merged["max_iter"] < 1:
        err("max_iter", f"max_iter >= 1 required, got {merged['max_iter']}")
    if merged["lambda_star"] <= 0:
        err("lambda_star", f"lambda_star > 0 required, got {merged['lambda_star']}")
    if not 0 < merged["epsilon_cutoff"] < 1:
        err("epsilon_cutoff", f"0 < epsilon_cutoff < 1 required, got {merged['epsilon_cutoff']}")
    lo, hi = merged["fit_window_lo"], merged["fit_window_hi"]
    if lo <= 0:
        err("fit_window_lo", f"fit_window_lo > 0 required, got {lo}")
    elif hi < 2 * lo:
        err("fit_window_hi", f"fit_window_hi >= 2 * fit_window_lo required, got {hi}")
    elif command in ("analyze", "sweep") and hi >= min(merged["d"]):
        err("fit_window_hi", f"fit window must end below d, got {hi}")
    if merged["seed"] < 0:
        err("seed", f"seed >= 0 required, got {merged['seed']}")
    if command in ("leaf", "solve", "analyze", "sweep") and merged["i"] >= 2 <= merged["j"]:
        if merged["i"] + merged["j"] <= 7:
            key = "i" if "i" in lines else "j"
            err(key, f"cone C_({merged['i']},{merged['j']}) is unstable; "
                     f"command {command!r} needs i + j >= 8")

    if errors:
        raise ConfigError(errors)
    return RunConfig(command=command, output_dir=str(output_dir),
                     explicit=tuple(sorted(values)), **merged)


def read_config(path, command=None, output_dir="."):
    with open(path) as fh:
        return parse_config(fh.read(), command, output_dir)
