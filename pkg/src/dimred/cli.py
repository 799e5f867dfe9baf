"""Command-line front end.

    dimred trees --n 4 --count-only
    dimred bp-coeff --n 2 --d 2 --exact
    dimred verify --n 3 --D 1 --samples 1e6 --seed 42

The payload is printed to stdout as JSON (or CSV for tables); ``--output``
also writes the full record. Records are cached under a content hash of
the command, its parameters, the seed and the package version.

Exit codes: 0 success, 1 invalid configuration, 2 numeric or verification failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import subprocess
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import exact_bp_table, fit_theta, ratio_extrapolate
from .combinatorics import EnumerationBoundError, count_trees, enumerate_trees, prufer_encode
from .forestroot import GaussianFamily, forest_root_sum
from .gas import exact_gas_coefficient, mayer_coefficient_mc
from .mc_core import MCEstimate, NonFiniteSampleError, RandomStream
from .polymer import HARD_CORE, bp_coefficient, bp_exact_coefficient, gaussian
from .reduction import gaussian_bump, raised_cosine, verify_green_order, verify_order

SCHEMA_VERSION = 1
CACHE_ENV = "DIMRED_CACHE_DIR"
COMMANDS = ("trees", "bp-coeff", "gas-coeff", "verify", "green", "forest-root", "exponents")
STOCHASTIC = {"bp-coeff", "gas-coeff", "verify", "green", "forest-root"}
TEST_FUNCTIONS = {"gaussian-bump": gaussian_bump, "raised-cosine": raised_cosine}
# fields that do not change the payload
_NOT_KEYED = {"workers", "output", "format"}


class ConfigError(ValueError):
    pass


class VerificationFailed(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    n: int | None = None
    n_max: int | None = None
    D: int | None = None
    d: int | None = None
    potential: str = "hard-core"
    amplitude: float = 1.0
    width: float = 1.0
    n_samples: int | None = None
    seed: int | None = None
    workers: int | None = None
    output: str | None = None
    format: str = "json"
    exact: bool = False
    count_only: bool = False
    test_function: str = "gaussian-bump"
    radius: float = 1.5
    rates_seed: int | None = None
    n_min: int = 10

    def validate(self) -> "RunConfig":
        c = self.command
        if c not in COMMANDS:
            raise ConfigError(f"unknown command {c!r}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.format!r}")
        if self.potential not in ("hard-core", "gaussian"):
            raise ConfigError(f"unknown potential {self.potential!r}")
        if self.potential == "gaussian" and (self.amplitude < 0 or self.width <= 0):
            raise ConfigError("gaussian potential needs amplitude >= 0 and width > 0")
        stochastic = c in STOCHASTIC and not (self.exact and c in ("bp-coeff", "gas-coeff"))
        if stochastic:
            if self.seed is None:
                raise ConfigError(f"{c} is stochastic: --seed is required")
            if self.n_samples is None:
                self.n_samples = 10**6
            if self.n_samples < 2:
                raise ConfigError("--samples must be >= 2")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("--workers must be >= 1")
        need_n = c != "exponents"
        if need_n and (self.n is None or self.n < 1):
            raise ConfigError(f"{c} needs --n >= 1")
        if c == "trees" and self.n > 8:
            raise ConfigError("trees: n <= 8")
        if c == "bp-coeff":
            if self.d is None or self.d < 2:
                raise ConfigError("bp-coeff needs --d >= 2")
            if self.exact and (self.d not in (2, 3) or self.potential != "hard-core"):
                raise ConfigError("--exact bp-coeff only for hard-core, d in {2, 3}")
        if c == "gas-coeff":
            if self.D is None or self.D < 0:
                raise ConfigError("gas-coeff needs --D >= 0")
            if self.exact and (self.D not in (0, 1) or self.potential != "hard-core"):
                raise ConfigError("--exact gas-coeff only for hard-core, D in {0, 1}")
            if not self.exact and not (2 <= self.n <= 8 and self.D >= 1):
                raise ConfigError("Monte Carlo gas-coeff needs 2 <= n <= 8 and D >= 1")
        if c == "verify":
            if self.D not in (1, 2, 3) or not 2 <= self.n <= 6:
                raise ConfigError("verify needs 2 <= n <= 6 and D in {1, 2, 3}")
        if c == "green":
            if self.D is None:
                self.D = 1
            if self.D not in (1, 2) or not 1 <= self.n <= 4:
                raise ConfigError("green needs 1 <= n <= 4 and D in {1, 2}")
            if self.potential != "hard-core":
                raise ConfigError("green is implemented for the hard-core gas only")
            if self.test_function not in TEST_FUNCTIONS or self.radius <= 0:
                raise ConfigError(f"test function must be one of {sorted(TEST_FUNCTIONS)} with radius > 0")
        if c == "forest-root" and not 1 <= self.n <= 5:
            raise ConfigError("forest-root needs 1 <= n <= 5")
        if c == "exponents":
            if self.d not in (2, 3):
                raise ConfigError("exponents needs --d in {2, 3}")
            if self.n_max is None:
                self.n_max = 50
            if self.n_max - self.n_min + 1 < 6 or self.n_min < 1:
                raise ConfigError("exponents needs at least 6 orders in [n_min, n_max]")
        return self

    def keyed(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if k not in _NOT_KEYED}


@dataclass
class ResultRecord:
    config: dict
    payload: dict
    timestamp: str
    version: str
    git: str
    schema_version: int = SCHEMA_VERSION
    exit_code: int = 0

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls(**json.loads(text))


# -- serialization ---------------------------------------------------------------

def jsonable(obj):
    """Plain JSON types; floats stay binary64 (``repr`` round-trips exactly)."""
    if isinstance(obj, MCEstimate):
        return {"mean": obj.mean, "std_error": obj.std_error, "n_samples": obj.n_samples,
                "seed": obj.seed, "n_workers": obj.n_workers}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {}
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            if f.name == "potential":
                v = {"kind": v.kind, "label": v.label, "params": list(v.params)}
            out["pass" if f.name == "passed" else f.name] = jsonable(v)
        return out
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, frozenset):
        return sorted(obj)
    return obj


def _git_stamp() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


# -- cache ----------------------------------------------------------------------------

def cache_key(config: RunConfig, version: str = __version__) -> str:
    blob = json.dumps({"params": config.keyed(), "version": version}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "dimred"


def cache_lookup(config: RunConfig, cache_dir: Path | None = None,
                 version: str = __version__) -> ResultRecord | None:
    path = (cache_dir or default_cache_dir()) / f"{cache_key(config, version)}.json"
    if not path.exists():
        return None
    try:
        return ResultRecord.from_json(path.read_text())
    except (ValueError, TypeError):
        return None


def cache_store(config: RunConfig, record: ResultRecord, cache_dir: Path | None = None,
                version: str = __version__) -> Path:
    root = cache_dir or default_cache_dir()
    root.mkdir(parents=True, exist_ok=True)
    path = root / f"{cache_key(config, version)}.json"
    tmp = path.with_suffix(".tmp")
    tmp.write_text(record.to_json())
    tmp.replace(path)
    return path


# -- dispatch ----------------------------------------------------------------------

def _potential(cfg: RunConfig):
    if cfg.potential == "gaussian":
        return gaussian(cfg.amplitude, cfg.width)
    return HARD_CORE


def _verdict(report) -> int:
    return 0 if report.passed else 2


def _compute(cfg: RunConfig) -> tuple[dict, int]:
    c = cfg.command
    kw = {"workers": cfg.workers}
    if c == "trees":
        payload = {"n": cfg.n, "count": count_trees(cfg.n)}
        if not cfg.count_only:
            payload["trees"] = [
                {"prufer": list(prufer_encode(t)) if t.n >= 2 else [], "edges": [list(e) for e in t.edges]}
                for t in enumerate_trees(cfg.n)
            ]
        return payload, 0
    if c == "bp-coeff":
        if cfg.exact:
            return {"n": cfg.n, "d": cfg.d, "method": "exact_formula",
                    "value": bp_exact_coefficient(cfg.n, cfg.d)}, 0
        res = bp_coefficient(cfg.n, cfg.d, _potential(cfg), cfg.n_samples, cfg.seed, **kw)
        payload = jsonable(res)
        if cfg.d in (2, 3) and cfg.potential == "hard-core":
            payload["exact"] = bp_exact_coefficient(cfg.n, cfg.d)
        return payload, 0
    if c == "gas-coeff":
        if cfg.exact:
            return {"n": cfg.n, "D": cfg.D, "method": f"exact_D{cfg.D}",
                    "value": exact_gas_coefficient(cfg.n, cfg.D)}, 0
        res = mayer_coefficient_mc(cfg.n, cfg.D, _potential(cfg), cfg.n_samples, cfg.seed, **kw)
        return jsonable(res), 0
    if c == "verify":
        rep = verify_order(cfg.n, cfg.D, _potential(cfg), cfg.n_samples, cfg.seed, **kw)
        return jsonable(rep), _verdict(rep)
    if c == "green":
        f = TEST_FUNCTIONS[cfg.test_function](cfg.radius)
        rep = verify_green_order(cfg.n, cfg.D, f, cfg.n_samples, cfg.seed, **kw)
        out = jsonable(rep)
        out["test_function"] = f.label
        return out, _verdict(rep)
    if c == "forest-root":
        if cfg.rates_seed is None:
            f = GaussianFamily.uniform(cfg.n)
        else:
            f = GaussianFamily.random(cfg.n, RandomStream(cfg.rates_seed, 0).generator(0))
        est = forest_root_sum(f, cfg.n_samples, cfg.seed, **kw)
        target = f.at_zero()
        z = est.z_score(target)
        return {"n": cfg.n, "terms": (cfg.n + 1) ** (cfg.n - 1), "vertex_rates": list(f.vertex_rates),
                "bond_rates": list(f.bond_rates), "sum": jsonable(est), "f0": target,
                "z_score": z, "pass": z <= 3.0}, (0 if z <= 3.0 else 2)
    if c == "exponents":
        table = exact_bp_table(cfg.d, cfg.n_max)
        fit = fit_theta(table, (cfg.n_min, cfg.n_max))
        zc, th = ratio_extrapolate(table)
        rows = [{"N": n, "log_coefficient": table.log_abs(n), "coefficient": table.mean(n)}
                for n in table.orders]
        return {"d": cfg.d, "table": rows, "fit": jsonable(fit),
                "ratio": {"z_c": zc, "theta": th}}, 0
    raise ConfigError(f"unknown command {c!r}")


def run(config: RunConfig, *, cache_dir: Path | None = None, use_cache: bool = True,
        force: bool = False) -> tuple[ResultRecord, int]:
    """Validate, consult the cache, compute, and return ``(record, exit_code)``."""
    config.validate()
    if use_cache and not force:
        hit = cache_lookup(config, cache_dir)
        if hit is not None:
            return hit, hit.exit_code
    payload, code = _compute(config)
    record = ResultRecord(
        config=jsonable(dataclasses.asdict(config)),
        payload=jsonable(payload),
        timestamp=datetime.now(timezone.utc).isoformat(),
        version=__version__,
        git=_git_stamp(),
        exit_code=code,
    )
    if use_cache:
        cache_store(config, record, cache_dir)
    return record, code


def payload_csv(payload: dict) -> str:
    rows = payload.get("table")
    if rows is None and "trees" in payload:
        rows = [{"index": k, "prufer": " ".join(map(str, t["prufer"])),
                 "edges": " ".join(f"{i}-{j}" for i, j in t["edges"])}
                for k, t in enumerate(payload["trees"])]
    if rows is None:
        raise ConfigError("csv output is only available for tables (exponents, trees)")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


# -- argument parsing ------------------------------------------------------------

def _samples(text: str) -> int:
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not math.isfinite(v) or v != int(v):
        raise argparse.ArgumentTypeError(f"sample count must be an integer, got {text!r}")
    return int(v)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of RunConfig fields; flags override it")
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("--samples", dest="n_samples", type=_samples, default=S)
    common.add_argument("--workers", type=int, default=S)
    common.add_argument("--output", default=S)
    common.add_argument("--format", choices=("json", "csv"), default=S)
    common.add_argument("--cache-dir", default=None)
    common.add_argument("--no-cache", action="store_true")
    common.add_argument("--force", action="store_true", help="recompute even on a cache hit")

    pot = argparse.ArgumentParser(add_help=False)
    pot.add_argument("--potential", choices=("hard-core", "gaussian"), default=S)
    pot.add_argument("--amplitude", type=float, default=S)
    pot.add_argument("--width", type=float, default=S)

    p = argparse.ArgumentParser(prog="dimred", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"dimred {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("trees", parents=[common], help="enumerate labeled trees")
    s.add_argument("--n", type=int, default=S)
    s.add_argument("--count-only", action="store_true", default=S)

    s = sub.add_parser("bp-coeff", parents=[common, pot], help="polymer coefficient (1/n!) sum_T W(T)")
    s.add_argument("--n", type=int, default=S)
    s.add_argument("--d", type=int, default=S)
    s.add_argument("--exact", action="store_true", default=S)

    s = sub.add_parser("gas-coeff", parents=[common, pot], help="gas pressure coefficient a_n")
    s.add_argument("--n", type=int, default=S)
    s.add_argument("--D", type=int, default=S)
    s.add_argument("--exact", action="store_true", default=S)

    s = sub.add_parser("verify", parents=[common, pot], help="check a_n against mapped b_n")
    s.add_argument("--n", type=int, default=S)
    s.add_argument("--D", type=int, default=S)

    s = sub.add_parser("green", parents=[common], help="check two-point coefficients")
    s.add_argument("--n", type=int, default=S)
    s.add_argument("--D", type=int, default=S)
    s.add_argument("--test-function", choices=sorted(TEST_FUNCTIONS), default=S)
    s.add_argument("--radius", type=float, default=S)

    s = sub.add_parser("forest-root", parents=[common], help="Forest-Root sum for the Gaussian family")
    s.add_argument("--n", type=int, default=S)
    s.add_argument("--rates-seed", type=int, default=S, help="draw random rates (default: all rates 1)")

    s = sub.add_parser("exponents", parents=[common], help="theta and z_c from exact tables")
    s.add_argument("--d", type=int, default=S)
    s.add_argument("--n-min", type=int, default=S)
    s.add_argument("--n-max", type=int, default=S)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if ns.config:
        try:
            values.update(json.loads(Path(ns.config).read_text()))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config file {ns.config}: {exc}") from exc
    skip = {"config", "cache_dir", "no_cache", "force"}
    values.update({k: v for k, v in vars(ns).items() if k not in skip})
    if values.get("command") != ns.command:
        values["command"] = ns.command
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    return RunConfig(**values)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = config_from_args(ns)
        cache_dir = Path(ns.cache_dir) if ns.cache_dir else None
        record, code = run(cfg, cache_dir=cache_dir, use_cache=not ns.no_cache, force=ns.force)
        text = payload_csv(record.payload) if cfg.format == "csv" else \
            json.dumps(record.payload, sort_keys=True, indent=2) + "\n"
    except (ConfigError, EnumerationBoundError, TypeError) as exc:
        print(f"dimred: error: {exc}", file=sys.stderr)
        return 1
    except (NonFiniteSampleError, ArithmeticError) as exc:
        print(f"dimred: numeric failure: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(text)
    if cfg.output:
        out = Path(cfg.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text if cfg.format == "csv" else record.to_json() + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
