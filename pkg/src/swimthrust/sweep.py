"""Stokes-number sweeps, zero-crossing and plateau analysis, CSV and plot output."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields as dc_fields
from typing import Callable, Sequence

import numpy as np

from . import fields as F
from . import quadrature as Q
from . import thrust as TH
from .verification import DEFAULT_SEED

log = logging.getLogger(__name__)

PATHS = ("reduced", "raw", "both")
MIN_PLATEAU_ROWS = 3  # rows needed in the top quartile before a plateau is judged
CSV_HEADER = ["h", "G1", "G2", "G3", "R1", "R2", "R3", "gamma1_1", "gamma1_2", "gamma1_3", "err", "nevals", "converged"]


class ConfigError(ValueError):
    """Invalid sweep configuration; ``field`` names the offending setting."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class SweepConfig:
    h_min: float = 0.0
    h_max: float = 200.0
    n_points: int = 101
    grid: tuple[float, ...] | None = None
    abs_tol: float = 1e-6
    mass_ratio: float = F.DEFAULT_MASS_RATIO
    path: str = "reduced"
    p0_sign: str = "flipped"
    out: str | None = None
    plot: str | None = None
    workers: int = 1
    seed: int = DEFAULT_SEED
    plateau_threshold: float = 0.02

    def __post_init__(self):
        if self.grid is not None:
            g = tuple(float(v) for v in self.grid)
            object.__setattr__(self, "grid", g)
            if len(g) < 1:
                raise ConfigError("grid", "must contain at least one value")
            if any(not math.isfinite(v) or v < 0 for v in g):
                raise ConfigError("grid", "values must be finite and >= 0")
            if any(b <= a for a, b in zip(g, g[1:])):
                raise ConfigError("grid", "values must be strictly increasing")
        else:
            if not (math.isfinite(self.h_min) and self.h_min >= 0):
                raise ConfigError("h_min", f"must be >= 0, got {self.h_min}")
            if not (math.isfinite(self.h_max) and self.h_max > self.h_min):
                raise ConfigError("h_max", f"must exceed h_min = {self.h_min}, got {self.h_max}")
            if int(self.n_points) != self.n_points or self.n_points < 2:
                raise ConfigError("n_points", f"must be an integer >= 2, got {self.n_points}")
        if not (self.abs_tol > 0):
            raise ConfigError("abs_tol", f"must be > 0, got {self.abs_tol}")
        if not (self.mass_ratio > 0):
            raise ConfigError("mass_ratio", f"must be > 0, got {self.mass_ratio}")
        if self.path not in PATHS:
            raise ConfigError("path", f"must be one of {PATHS}, got {self.path!r}")
        if self.p0_sign not in F.P0_SIGNS:
            raise ConfigError("p0_sign", f"must be one of {tuple(F.P0_SIGNS)}, got {self.p0_sign!r}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ConfigError("workers", f"must be a positive integer, got {self.workers}")
        if not 0 < self.plateau_threshold < 1:
            raise ConfigError("plateau_threshold", f"must lie in (0, 1), got {self.plateau_threshold}")
        if self.path != "reduced" and self.h_values()[0] <= 0:
            raise ConfigError("h_min", "the raw path needs h > 0")

    @classmethod
    def from_mapping(cls, data: dict) -> "SweepConfig":
        known = {f.name for f in dc_fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown setting")
        return cls(**data)

    def h_values(self) -> np.ndarray:
        if self.grid is not None:
            return np.array(self.grid)
        return np.linspace(self.h_min, self.h_max, int(self.n_points))

    def volume_rule(self) -> Q.VolumeRule:
        return Q.VolumeRule(abs_tol=self.abs_tol)


@dataclass(frozen=True)
class SweepRow:
    h: float
    G: tuple[float, float, float]
    R: tuple[float, float, float]
    gamma1: tuple[float, float, float]
    err: float
    nevals: int
    converged: bool

    @classmethod
    def from_result(cls, res: TH.ThrustResult) -> "SweepRow":
        return cls(float(res.h), tuple(map(float, res.G)), tuple(map(float, res.R)),
                   tuple(map(float, res.gamma1)), float(res.error_estimate), int(res.n_evals), bool(res.converged))

    def cells(self) -> list[str]:
        nums = [self.h, *self.G, *self.R, *self.gamma1, self.err]
        return [format(v, ".17g") for v in nums] + [str(self.nevals), "true" if self.converged else "false"]


@dataclass
class SweepTable:
    rows: list[SweepRow] = field(default_factory=list)
    path: str = "reduced"

    def __len__(self):
        return len(self.rows)

    @property
    def h(self) -> np.ndarray:
        return np.array([r.h for r in self.rows])

    @property
    def G2(self) -> np.ndarray:
        return np.array([r.G[1] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow(r.cells())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, path: str = "reduced") -> "SweepTable":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        rows = []
        for cells in reader:
            if not cells:
                continue
            v = [float(c) for c in cells[:11]]
            rows.append(SweepRow(v[0], tuple(v[1:4]), tuple(v[4:7]), tuple(v[7:10]), v[10], int(cells[11]),
                                 cells[12] == "true"))
        return cls(rows, path)


def evaluate_point(h: float, cfg: SweepConfig, path: str = "reduced") -> TH.ThrustResult:
    params = F.ModelParams(float(h), cfg.mass_ratio)
    if path == "raw":
        return TH.thrust_raw(params, cfg.volume_rule(), p0_sign=cfg.p0_sign)
    return TH.thrust_reduced(params, cfg.volume_rule())


def _row_task(args) -> SweepRow:
    h, cfg, path = args
    return SweepRow.from_result(evaluate_point(h, cfg, path))


def run_sweep(cfg: SweepConfig, path: str | None = None,
              progress: Callable[[SweepRow], None] | None = None) -> SweepTable:
    """One thrust evaluation per grid point, in grid order.

    Non-converged rows are kept and flagged. ``path`` overrides ``cfg.path``
    (``"both"`` is resolved by the caller into two sweeps).
    """
    path = path or ("reduced" if cfg.path == "both" else cfg.path)
    tasks = [(float(h), cfg, path) for h in cfg.h_values()]
    rows: list[SweepRow] = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for row in pool.map(_row_task, tasks):
                rows.append(row)
                if progress:
                    progress(row)
    else:
        for t in tasks:
            row = _row_task(t)
            rows.append(row)
            if progress:
                progress(row)
    bad = [r.h for r in rows if not r.converged]
    if bad:
        log.warning("quadrature did not converge at h = %s", ", ".join(f"{h:g}" for h in bad))
    return SweepTable(rows, path)


# ---------------------------------------------------------------------------
# analysis


@dataclass(frozen=True)
class ZeroCrossing:
    found: bool
    bracket: tuple[float, float] | None = None
    root: float | None = None
    direction: str | None = None  # "+-" or "-+"
    n_evals: int = 0

    def describe(self) -> str:
        if not self.found:
            return "no crossing"
        lo, hi = self.bracket
        return f"h0 = {self.root:.4f} in [{lo:.4f}, {hi:.4f}], sign {self.direction[0]} -> {self.direction[1]}"


def _sign(v: float) -> int:
    return int(v > 0) - int(v < 0)


def find_zero_crossing(source, evaluate: Callable[[float], float] | None = None, tol: float = 0.05,
                       scan: Sequence[float] = tuple(np.linspace(0.0, 20.0, 11))) -> ZeroCrossing:
    """Locate the first sign change of ``G2(h)``.

    ``source`` is a :class:`SweepTable`, a sequence of ``(h, G2)`` pairs, or a
    callable ``h -> G2``. A callable is first scanned on ``scan``. With a live
    evaluator (the callable itself or ``evaluate``) the bracket is bisected
    to width ``< tol``; a table alone yields the linear-interpolation root.
    """
    n_evals = 0
    if callable(source):
        evaluate = source
        pairs = [(float(h), float(source(h))) for h in scan]
        n_evals += len(pairs)
    elif isinstance(source, SweepTable):
        pairs = [(float(h), float(g)) for h, g in zip(source.h, source.G2)]
    else:
        pairs = [(float(h), float(g)) for h, g in source]
    nonzero = [k for k, (_, g) in enumerate(pairs) if g != 0.0]
    for a, b in zip(nonzero, nonzero[1:]):
        (h0, g0), (h1, g1) = pairs[a], pairs[b]
        if _sign(g0) * _sign(g1) < 0:
            break
    else:
        return ZeroCrossing(False, n_evals=n_evals)
    direction = ("+" if g0 > 0 else "-") + ("+" if g1 > 0 else "-")
    if b - a > 1:  # the table hits zero exactly between the two signed values
        hz = pairs[a + 1][0]
        return ZeroCrossing(True, (hz, hz), hz, direction, n_evals)
    lo, hi, glo = h0, h1, g0
    if evaluate is None:
        return ZeroCrossing(True, (lo, hi), lo - glo * (hi - lo) / (g1 - glo), direction, n_evals)
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        gm = float(evaluate(mid))
        n_evals += 1
        if gm == 0.0:
            lo = hi = mid
            break
        if _sign(gm) == _sign(glo):
            lo, glo = mid, gm
        else:
            hi = mid
    return ZeroCrossing(True, (lo, hi), 0.5 * (lo + hi), direction, n_evals)


def live_G2(abs_tol: float = 1e-6, mass_ratio: float = F.DEFAULT_MASS_RATIO) -> Callable[[float], float]:
    """``h -> G2(h)`` on the reduced path."""
    rule = Q.VolumeRule(abs_tol=abs_tol)

    def evaluate(h: float) -> float:
        return float(TH.thrust_reduced(F.ModelParams(float(h), mass_ratio), rule).G[1])

    return evaluate


@dataclass(frozen=True)
class AnalysisResult:
    zero_crossing: ZeroCrossing
    plateau_onset: float | None
    plateau_value: float | None
    plateau_present: bool
    threshold: float

    def omega_opt(self, nu: float, a: float) -> float:
        """Speed-maximising frequency ``2 h_p^2 nu / a^2`` (from ``h = sqrt(omega / 2 nu) a``)."""
        if self.plateau_onset is None:
            raise ValueError("no plateau onset available")
        return 2.0 * self.plateau_onset**2 * nu / a**2

    def summary(self, nu: float | None = None, a: float | None = None) -> str:
        lines = [f"zero crossing: {self.zero_crossing.describe()}"]
        if self.plateau_onset is None:
            lines.append(f"plateau: not determined (fewer than {MIN_PLATEAU_ROWS} rows in the top quartile)")
        elif not self.plateau_present:
            lines.append(f"plateau: not reached on this grid (top quartile varies by more than "
                         f"{100 * self.threshold:g}%, last G2 = {self.plateau_value:.8g})")
        else:
            lines.append(f"plateau: G2 -> {self.plateau_value:.8g} within {100 * self.threshold:g}% "
                         f"for h >= {self.plateau_onset:g} ({'present' if self.plateau_present else 'not flat'} "
                         f"over the top quartile)")
            hp = self.plateau_onset
            if nu is not None and a is not None:
                lines.append(f"omega_opt = 2 * {hp:g}^2 * nu / a^2 = {self.omega_opt(nu, a):.6g}")
            else:
                lines.append(f"omega_opt = 2 * {hp:g}^2 * nu / a^2")
        return "\n".join(lines)


def analyze(table: SweepTable, threshold: float = 0.02, evaluate: Callable[[float], float] | None = None,
            tol: float = 0.05) -> AnalysisResult:
    """Zero crossing and plateau of ``G2`` over a sweep table.

    The plateau value is ``G2`` at the largest ``h``; the onset is the
    smallest grid ``h`` beyond which every row stays within ``threshold``
    (relative) of it. ``plateau_present`` requires the top quartile of the
    grid to vary by less than ``threshold``. Grids with fewer than
    ``MIN_PLATEAU_ROWS`` rows in the top quartile leave the plateau undetermined.
    """
    zc = find_zero_crossing(table, evaluate, tol)
    hs, g = table.h, table.G2
    top = g[hs >= hs[0] + 0.75 * (hs[-1] - hs[0])] if len(hs) else g
    if len(top) < MIN_PLATEAU_ROWS:
        return AnalysisResult(zc, None, None, False, threshold)
    ref = g[-1]
    close = np.abs(g - ref) <= threshold * abs(ref)
    onset_idx = len(g) - 1
    while onset_idx > 0 and close[onset_idx - 1]:
        onset_idx -= 1
    present = bool(ref != 0 and (top.max() - top.min()) <= threshold * abs(ref))
    return AnalysisResult(zc, float(hs[onset_idx]), float(ref), present, threshold)


def relative_variation(values: Sequence[float]) -> float:
    v = np.asarray(values, dtype=float)
    return float((v.max() - v.min()) / np.abs(v).mean())


# ---------------------------------------------------------------------------
# output


def _check_writable(path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory) or not os.access(directory, os.W_OK):
        raise OSError(f"cannot write to {path}: directory {directory} is missing or not writable")


def write_csv(table: SweepTable, path: str) -> None:
    _check_writable(path)
    with open(path, "w", newline="") as fh:
        fh.write(table.to_csv())


def read_csv(path: str) -> SweepTable:
    with open(path, newline="") as fh:
        return SweepTable.from_csv(fh.read())


def plot_table(table: SweepTable, path: str, analysis: AnalysisResult | None = None) -> None:
    """Vector plot of ``G2`` against ``h`` with the zero crossing marked."""
    _check_writable(path)
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(table.h, table.G2, "-", color="C0", lw=1.5, label=r"$\mathcal{G}_2(h)$")
    ax.axhline(0.0, color="0.6", lw=0.8)
    zc = analysis.zero_crossing if analysis else find_zero_crossing(table)
    if zc.found:
        ax.axvline(zc.root, color="C3", ls="--", lw=1.0)
        ax.plot([zc.root], [0.0], "o", color="C3", label=f"$h_0 \\approx {zc.root:.2f}$")
    ax.set_xlabel("Stokes number $h$")
    ax.set_ylabel("thrust $\\mathcal{G}_2$")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None} if path.endswith(".svg") else None)
    plt.close(fig)


def emit_outputs(table: SweepTable, analysis: AnalysisResult, cfg: SweepConfig,
                 nu: float | None = None, a: float | None = None) -> dict[str, str]:
    """Write the CSV, the summary (next to the CSV) and the optional plot.

    Returns a mapping of output kind to path; the summary text is always
    included under ``"summary_text"``.
    """
    if not table.rows:
        raise ValueError("empty sweep table")
    written = {"summary_text": analysis.summary(nu, a)}
    if cfg.out:
        write_csv(table, cfg.out)
        written["csv"] = cfg.out
        summary_path = os.path.splitext(cfg.out)[0] + ".summary.txt"
        with open(summary_path, "w") as fh:
            fh.write(written["summary_text"] + "\n")
        written["summary"] = summary_path
    if cfg.plot:
        plot_table(table, cfg.plot, analysis)
        written["plot"] = cfg.plot
    return written
