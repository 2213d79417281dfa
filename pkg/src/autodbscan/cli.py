"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 configuration error, 4 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import autoparams, datagen, dbscan, plotting
from .dbscan import Labeling, Params, Role
from .geometry import NOISE, Dataset, DimensionError, DistanceSpec, EmptyInputError
from .kdtree import KdTree, SplitRule
from .metrics import QualityReport

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_INTERNAL = 0, 2, 3, 4

ROLE_NAMES = {Role.CORE: "core", Role.BORDER: "border", Role.NOISE_PT: "noise"}


class InputError(Exception):
    pass


class ConfigError(Exception):
    pass


class Mode(str, Enum):
    MANUAL = "manual"
    AUTO = "auto"


@dataclass
class RunConfig:
    input: Optional[Path] = None
    preset: Optional[str] = None
    rng_seed: Optional[int] = None
    truth_col: bool = False
    mode: Mode = Mode.AUTO
    eps: Optional[float] = None
    min_pts: Optional[int] = None
    q: float = 2.0
    weights: Optional[tuple] = None
    auto: autoparams.AutoConfig = field(default_factory=autoparams.AutoConfig)
    seeds_file: Optional[Path] = None
    out_labels: Optional[Path] = None
    out_report: Optional[Path] = None
    out_svg: Optional[Path] = None
    out_data: Optional[Path] = None
    plot_dims: tuple = (0, 1)

    def validate(self) -> None:
        if (self.input is None) == (self.preset is None):
            raise ConfigError("give exactly one of --input and --preset")
        if self.mode is Mode.MANUAL:
            if self.eps is None or self.min_pts is None:
                raise ConfigError("manual mode needs both --eps and --min-pts")
        elif self.eps is not None or self.min_pts is not None:
            raise ConfigError("auto mode generates its own parameters; drop --eps/--min-pts")
        if self.seeds_file is not None and self.mode is not Mode.AUTO:
            raise ConfigError("--seeds-file only applies to auto mode")


# ---------------------------------------------------------------- CSV input

def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_csv(path, truth_col: bool = False) -> Dataset:
    """Numeric CSV to a :class:`Dataset`, rows in file order.

    A first row containing any non-numeric cell is taken as a header. With
    ``truth_col`` the last column holds integer class labels (-1 = noise).
    Blank lines are skipped.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    rows = [(n, r) for n, r in enumerate(csv.reader(io.StringIO(text)), start=1)
            if r and any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: no data rows")
    width = len(rows[0][1])
    if truth_col and width < 2:
        raise InputError(f"{path}: a truth column needs at least one coordinate column")
    coords, truth = [], []
    for line, row in rows:
        if len(row) != width:
            raise InputError(f"{path}: line {line} has {len(row)} columns, expected {width}")
        vals = []
        for col, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(f"{path}: line {line}, column {col}: "
                                 f"non-numeric value {cell.strip()!r}") from None
            if not np.isfinite(v):
                raise InputError(f"{path}: line {line}, column {col}: non-finite value")
            vals.append(v)
        if truth_col:
            t = vals.pop()
            if t != int(t):
                raise InputError(f"{path}: line {line}, column {width}: truth label must be an integer")
            truth.append(int(t))
        coords.append(vals)
    return Dataset(np.array(coords), np.array(truth, dtype=np.int64) if truth_col else None)


def _fmt(v: float) -> str:
    return repr(float(v))


def data_csv(data: Dataset) -> str:
    """Dataset (and truth, when known) as CSV readable by :func:`read_csv`."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = [f"x{k}" for k in range(data.dim)]
    w.writerow(head + (["truth"] if data.truth is not None else []))
    for i, row in enumerate(data.coords):
        cells = [_fmt(v) for v in row]
        if data.truth is not None:
            cells.append(str(int(data.truth[i])))
        w.writerow(cells)
    return buf.getvalue()


def labels_csv(data: Dataset, labeling: Labeling) -> str:
    """Original columns followed by ``cluster`` (-1 = noise) and ``role``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = [f"x{k}" for k in range(data.dim)]
    if data.truth is not None:
        head.append("truth")
    w.writerow(head + ["cluster", "role"])
    for i, row in enumerate(data.coords):
        cells = [_fmt(v) for v in row]
        if data.truth is not None:
            cells.append(str(int(data.truth[i])))
        cells += [str(int(labeling.label[i])), ROLE_NAMES[Role(int(labeling.role[i]))]]
        w.writerow(cells)
    return buf.getvalue()


# ---------------------------------------------------------------- running

def _parse_floats(text: str, what: str) -> tuple:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise ConfigError(f"{what} must be a comma-separated list of numbers, got {text!r}") from None


def _load(cfg: RunConfig) -> Dataset:
    if cfg.preset is not None:
        try:
            spec = datagen.preset(cfg.preset, cfg.rng_seed)
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from None
        return datagen.generate(spec)
    return read_csv(cfg.input, cfg.truth_col)


def _check(data: Dataset, labeling: Labeling) -> None:
    lab = np.asarray(labeling.label)
    if lab.shape != (data.n,):
        raise AssertionError("labeling size differs from the dataset")
    if np.any((lab < 0) & (lab != NOISE)) or (lab.size and lab.max() >= labeling.cluster_count):
        raise AssertionError("cluster ids outside [0, cluster_count)")


def _report_text(labeling: Labeling, data: Dataset, pairs: Sequence, runtime_ms: float,
                 mode: Mode) -> tuple[str, Optional[QualityReport]]:
    lines = [f"mode={mode.value}", f"points={data.n}", f"dim={data.dim}"]
    for k, p in enumerate(pairs):
        lines.append(f"pair.{k}={_fmt(p.eps)},{p.min_pts},{p.population}")
    report = None
    if data.truth is not None:
        report = QualityReport.build(labeling, data.truth, len(pairs), runtime_ms)
        body = report.as_text()
    else:
        n = data.n
        body = (f"noise_ratio={_fmt(labeling.noise_count / n if n else 0.0)}\n"
                f"cluster_count={labeling.cluster_count}\n"
                f"pair_count={len(pairs)}\n"
                f"runtime_ms={_fmt(runtime_ms)}\n")
    return "\n".join(lines) + "\n" + body, report


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute one configured run; returns the process exit code."""
    out = stdout if stdout is not None else sys.stdout
    cfg.validate()
    data = _load(cfg)
    if cfg.out_data is not None:
        Path(cfg.out_data).write_text(data_csv(data), encoding="utf-8")
    try:
        spec = DistanceSpec(cfg.q, cfg.weights)
        spec.weights_for(data.dim)
    except (ValueError, DimensionError) as exc:
        raise ConfigError(str(exc)) from None

    started = time.perf_counter()
    if cfg.mode is Mode.MANUAL:
        try:
            params = Params(cfg.eps, cfg.min_pts)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if data.n == 0:
            raise InputError("input has no points")
        tree = KdTree(data, cfg.auto.leaf_capacity, cfg.auto.split_rule)
        labeling = dbscan.cluster(data, tree, params, spec)
        pairs = [autoparams.ParamPair(params.eps, params.min_pts, data.n)]
    else:
        auto_cfg = cfg.auto
        if cfg.seeds_file is not None:
            seeds = read_csv(cfg.seeds_file).coords
            if seeds.shape[1] != data.dim:
                raise ConfigError(f"seed points have dim {seeds.shape[1]}, data has dim {data.dim}")
            auto_cfg = autoparams.AutoConfig(**{**auto_cfg.__dict__, "seeds": seeds})
        if data.n == 0:
            raise InputError("input has no points")
        labeling, pairs = autoparams.cluster_auto(data, spec, auto_cfg)
    runtime_ms = (time.perf_counter() - started) * 1000.0
    _check(data, labeling)

    table = labels_csv(data, labeling)
    if cfg.out_labels is not None:
        Path(cfg.out_labels).write_text(table, encoding="utf-8")
    else:
        out.write(table)
    report, _ = _report_text(labeling, data, pairs, runtime_ms, cfg.mode)
    if cfg.out_report is not None:
        Path(cfg.out_report).write_text(report, encoding="utf-8")
    elif cfg.out_labels is not None:
        out.write(report)
    if cfg.out_svg is not None:
        try:
            plotting.write_svg(data, labeling, cfg.plot_dims, cfg.out_svg)
        except DimensionError as exc:
            raise ConfigError(str(exc)) from None
    return EXIT_OK


# ---------------------------------------------------------------- argv

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="autodbscan",
        description="DBSCAN with kd-tree cell-based automatic (eps, min_pts) generation.")
    src = p.add_argument_group("input")
    src.add_argument("--input", type=Path, help="numeric CSV file")
    src.add_argument("--preset", help=f"built-in dataset: {', '.join(datagen.PRESETS)}")
    src.add_argument("--rng-seed", type=int, help="override the preset's fixed seed")
    src.add_argument("--truth-col", action="store_true",
                     help="last CSV column is an integer truth label (-1 = noise)")
    alg = p.add_argument_group("clustering")
    alg.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.AUTO.value)
    alg.add_argument("--eps", type=float, help="manual mode radius")
    alg.add_argument("--min-pts", type=int, help="manual mode neighbourhood size")
    alg.add_argument("--q", type=float, default=2.0, help="Minkowski exponent (>= 1)")
    alg.add_argument("--weights", help="comma-separated per-column weights")
    alg.add_argument("--leaf-capacity", type=int)
    alg.add_argument("--split-rule", choices=[r.value for r in SplitRule],
                     default=SplitRule.MEDIAN.value)
    alg.add_argument("--merge-tol", type=float, default=autoparams.AutoConfig.merge_tol_eps)
    alg.add_argument("--min-pts-floor", type=int, default=autoparams.AutoConfig.min_pts_floor)
    alg.add_argument("--density-contrast", type=float,
                     default=autoparams.AutoConfig.density_contrast,
                     help="drop cells below this multiple of background density (0 = off)")
    alg.add_argument("--seeds-file", type=Path, help="CSV of seed points (restricts cells)")
    res = p.add_argument_group("output")
    res.add_argument("--out-labels", type=Path, help="labels CSV (default: stdout)")
    res.add_argument("--out-report", type=Path, help="key=value run report")
    res.add_argument("--out-svg", type=Path, help="2-D scatter plot")
    res.add_argument("--out-data", type=Path, help="write the loaded dataset as CSV")
    res.add_argument("--plot-dims", default="0,1", help="two column indices to plot")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    dims = _parse_floats(ns.plot_dims, "--plot-dims")
    if len(dims) != 2 or any(d != int(d) for d in dims):
        raise ConfigError("--plot-dims must be two integer column indices")
    try:
        auto = autoparams.AutoConfig(
            leaf_capacity=ns.leaf_capacity,
            split_rule=ns.split_rule,
            merge_tol_eps=ns.merge_tol,
            min_pts_floor=ns.min_pts_floor,
            density_contrast=ns.density_contrast,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(
        input=ns.input, preset=ns.preset, rng_seed=ns.rng_seed, truth_col=ns.truth_col,
        mode=Mode(ns.mode), eps=ns.eps, min_pts=ns.min_pts, q=ns.q,
        weights=_parse_floats(ns.weights, "--weights") if ns.weights else None,
        auto=auto, seeds_file=ns.seeds_file, out_labels=ns.out_labels,
        out_report=ns.out_report, out_svg=ns.out_svg, out_data=ns.out_data,
        plot_dims=tuple(int(d) for d in dims),
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return run(config_from_args(ns))
    except ConfigError as exc:
        print(f"autodbscan: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, EmptyInputError) as exc:
        print(f"autodbscan: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as exc:
        print(f"autodbscan: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
