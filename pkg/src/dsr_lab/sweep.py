"""Parameter sweeps, crossover search and result emission.

Every number written here comes from a library call; this module only
schedules points, orders rows and formats output.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import benchmarks as bm
from . import gaussian as gc
from . import receiver as rx
from .channels import PhaseDiffusionSpec, ThermalSpec, phase_diffuse_pure
from .config import SweepConfig
from .detection import PnrModel, displaced_thermal_pmf
from .errors import BracketError, DsrLabError
from .fock import mixture_density, photon_distribution

BASE_COLUMNS = (
    "N", "beta", "eta", "nu", "M", "sigma", "n_t", "p_err_dsr", "n_th",
    "p_hb_dss", "p_sql_dss", "p_hb_cs", "p_sql_cs",
)


@dataclass
class ResultRow:
    N: float
    beta: float
    eta: float
    nu: float
    M: int
    sigma: float
    n_t: float
    p_err_dsr: float = math.nan
    n_th: int | None = None
    p_hb_dss: float = math.nan
    p_sql_dss: float = math.nan
    p_hb_cs: float = math.nan
    p_sql_cs: float = math.nan
    ratios: dict = field(default_factory=dict)
    error: str | None = None

    def as_dict(self, kinds=()) -> dict:
        d = {c: getattr(self, c) for c in BASE_COLUMNS}
        for k in kinds:
            d[ratio_column(k)] = self.ratios.get(k, math.nan)
        return d


def ratio_column(kind: str) -> str:
    return f"ratio_db_vs_{kind.lower()}"


def columns(config: SweepConfig) -> list[str]:
    return list(BASE_COLUMNS) + [ratio_column(k) for k in config.outputs.ratio_benchmarks]


def _detector(config: SweepConfig) -> PnrModel:
    d = config.detector
    if config.scenario in ("ideal", "benchmarks"):
        return PnrModel(d.M)
    return PnrModel(d.M, d.eta, d.nu)


def compute_row(config: SweepConfig, N: float) -> ResultRow:
    """One grid point. Library errors become a row-level ``error`` entry."""
    N = float(N)
    det = _detector(config)
    noise = config.noise
    row = ResultRow(N=N, beta=math.nan, eta=det.eta, nu=det.nu, M=det.M,
                    sigma=noise.sigma or 0.0, n_t=noise.n_t or 0.0)
    try:
        signal = rx.SignalSpec(N, config.beta, config.priors.p0, config.priors.p1)
        row.beta = signal.beta
        tail = config.numerics.tail_tol
        if config.scenario in ("ideal", "benchmarks"):
            decision = rx.dsr_error_pnr(signal, det)
            if config.beta is None and signal.p0 == signal.p1:
                decision = rx.Decision(rx.dsr_error_ideal(N), decision.n_th)
        elif config.scenario == "pnr":
            decision = rx.dsr_error_pnr(signal, det)
        else:
            pd = th = None
            if noise.sigma is not None:
                pd = PhaseDiffusionSpec(noise.sigma, config.numerics.quad_order)
            if noise.n_t is not None:
                th = ThermalSpec(noise.n_t)
            if pd is not None and th is not None:
                decision = rx.dsr_error_combined(signal, det, pd, th, tail)
            elif pd is not None:
                decision = rx.dsr_error_phase_diffusion(signal, det, pd, tail)
            else:
                decision = rx.dsr_error_thermal(signal, det, th)
        row.p_err_dsr, row.n_th = decision.p_err, decision.n_th
        row.p_hb_dss = bm.hb_dss(N, config.beta)
        row.p_sql_dss = bm.sql_dss(N, config.beta)
        row.p_hb_cs = bm.hb_cs(N)
        row.p_sql_cs = bm.sql_cs(N)
        for kind in config.outputs.ratio_benchmarks:
            ref = bm.benchmark(kind, N, config.beta, noise.sigma or 0.0, config.numerics.quad_order)
            row.ratios[kind] = bm.ratio_db(ref, row.p_err_dsr)
    except (DsrLabError, ArithmeticError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def _compute_star(args):
    return compute_row(*args)


def resolve_jobs(jobs: int | None = None) -> int:
    env = os.environ.get("DSR_LAB_JOBS")
    if env:
        jobs = int(env)
    return max(1, int(jobs or 1))


def parallel_map(func, tasks, jobs: int | None = None) -> list:
    """Order-preserving map, serial when ``jobs == 1``."""
    jobs = resolve_jobs(jobs)
    tasks = list(tasks)
    if jobs == 1 or len(tasks) < 2:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def run_sweep(config: SweepConfig, jobs: int | None = None) -> list[ResultRow]:
    return parallel_map(_compute_star, [(config, N) for N in config.grid.values()], jobs)


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def table_csv(header, records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for rec in records:
        writer.writerow([format_value(rec.get(c)) for c in header])
    return buf.getvalue()


def _json_safe(v):
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else format_value(v)
    return v


def rows_csv(rows, config: SweepConfig) -> str:
    kinds = config.outputs.ratio_benchmarks
    return table_csv(columns(config), [r.as_dict(kinds) for r in rows])


def rows_json(rows, config: SweepConfig) -> str:
    kinds = config.outputs.ratio_benchmarks
    out = []
    for r in rows:
        d = r.as_dict(kinds)
        if r.error:
            d["error"] = r.error
        out.append(d)
    doc = {"config": config.to_dict(), "version": __version__, "rows": out}
    return json.dumps(_json_safe(doc), indent=2, allow_nan=False) + "\n"


def write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def emit(rows, config: SweepConfig, csv_path=None, json_path=None):
    """Write the CSV and JSON mirrors; explicit paths override the config."""
    csv_path = csv_path or config.outputs.csv_path
    json_path = json_path or config.outputs.json_path
    written = []
    if csv_path:
        write_text(csv_path, rows_csv(rows, config))
        written.append(Path(csv_path))
    if json_path:
        write_text(json_path, rows_json(rows, config))
        written.append(Path(json_path))
    return written


def find_crossover(curve_a, curve_b, bracket, xtol: float = 1e-5) -> float:
    """Bisection for ``curve_a(N) == curve_b(N)`` inside ``bracket``."""
    lo, hi = map(float, bracket)
    f_lo = curve_a(lo) - curve_b(lo)
    f_hi = curve_a(hi) - curve_b(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(f"no sign change on [{lo}, {hi}] ({f_lo!r}, {f_hi!r})")
    while hi - lo >= xtol:
        mid = 0.5 * (lo + hi)
        f_mid = curve_a(mid) - curve_b(mid)
        if f_mid == 0:
            return mid
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


NT_MIN, NT_MAX = 1e-9, 1.0


def max_tolerable_thermal(N: float, det: PnrModel, rtol: float = 1e-4,
                          beta: float | None = None, p0: float = 0.5, p1: float = 0.5) -> float:
    """Largest ``n_t`` in ``[1e-9, 1]`` with the receiver still at or below the squeezed SQL.

    Returns 0 when even ``n_t = 1e-9`` is too much, and 1 when the whole
    range is tolerated. Bisection runs on ``log n_t``.
    """
    if N <= 0:
        raise ValueError("N must be > 0")
    signal = rx.SignalSpec(N, beta, p0, p1)
    target = bm.sql_dss(N, beta)

    def excess(n_t):
        return rx.dsr_error_thermal(signal, det, ThermalSpec(n_t)).p_err - target

    if excess(NT_MIN) > 0:
        return 0.0
    if excess(NT_MAX) <= 0:
        return NT_MAX
    lo, hi = NT_MIN, NT_MAX
    while hi / lo - 1 > rtol:
        mid = math.sqrt(lo * hi)
        if excess(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def _ntmax_star(args):
    N, det, beta, p0, p1 = args
    return max_tolerable_thermal(N, det, beta=beta, p0=p0, p1=p1)


NTMAX_COLUMNS = ("N", "M", "eta", "nu", "n_t_max")


def run_ntmax(config: SweepConfig, jobs: int | None = None) -> list[dict]:
    det = PnrModel(config.detector.M, config.detector.eta, config.detector.nu)
    Ns = config.grid.values()
    tasks = [(float(N), det, config.beta, config.priors.p0, config.priors.p1) for N in Ns]
    values = parallel_map(_ntmax_star, tasks, jobs)
    return [{"N": float(N), "M": det.M, "eta": det.eta, "nu": det.nu, "n_t_max": v}
            for N, v in zip(Ns, values)]


def curve(spec):
    """Turn a curve description into a function of ``N``.

    Accepts a benchmark/receiver name (``dsr_ideal``, ``hb_dss``, ``sql_dss``,
    ``hb_cs``, ``sql_cs``), a number (constant level) or ``{"dsr_eta": eta}``.
    """
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        level = float(spec)
        return lambda N: level
    if isinstance(spec, dict) and set(spec) == {"dsr_eta"}:
        eta = float(spec["dsr_eta"])
        return lambda N: rx.dsr_error_eta(N, eta)
    named = {
        "dsr_ideal": rx.dsr_error_ideal,
        "hb_dss": bm.hb_dss,
        "sql_dss": bm.sql_dss,
        "hb_cs": bm.hb_cs,
        "sql_cs": bm.sql_cs,
    }
    if isinstance(spec, str) and spec in named:
        return named[spec]
    raise ValueError(f"unknown curve {spec!r}")


def population_table(N: float, nmax: int, beta: float | None = None, sigma: float | None = None,
                     n_t: float | None = None, quad_order: int = 41,
                     tail_tol: float = 1e-10) -> dict:
    """Photon-number populations at each receiver stage, ``n = 0..nmax``."""
    s = rx.SignalSpec(N, beta)
    n = np.arange(nmax + 1)
    cols = {"n": n}

    def pops(components):
        p = photon_distribution(mixture_density(components, None, tail_tol))
        return np.pad(p, (0, max(0, nmax + 1 - len(p))))[: nmax + 1]

    if sigma is not None:
        pd = PhaseDiffusionSpec(sigma, quad_order)
        for i in (0, 1):
            sign = 1 if i else -1
            p = photon_distribution(phase_diffuse_pure(sign * s.alpha, s.r, pd, None, tail_tol))
            cols[f"rho{i}_pd"] = np.pad(p, (0, max(0, nmax + 1 - len(p))))[: nmax + 1]
        for i, z in enumerate(rx.phase_diffusion_states(s, pd, tail_tol)):
            p = photon_distribution(z)
            cols[f"zeta{i}"] = np.pad(p, (0, max(0, nmax + 1 - len(p))))[: nmax + 1]
        return cols
    displaced = [gc.apply_unitary(s.state(i), gc.displacement(s.alpha)) for i in (0, 1)]
    final = [gc.apply_unitaries(s.state(i), s.receiver_unitaries()) for i in (0, 1)]
    for i in (0, 1):
        cols[f"rho{i}_input"] = pops([(1.0, s.state(i))])
    for i in (0, 1):
        cols[f"rho{i}_displaced"] = pops([(1.0, displaced[i])])
    for i in (0, 1):
        cols[f"zeta{i}"] = pops([(1.0, final[i])])
    if n_t is not None:
        cols["zeta0_thermal"] = displaced_thermal_pmf(0.0, n_t, nmax)
        cols["zeta1_thermal"] = displaced_thermal_pmf(s.gamma ** 2, n_t, nmax)
    return cols


def table_records(cols: dict) -> tuple[list[str], list[dict]]:
    header = list(cols)
    n = len(next(iter(cols.values())))
    return header, [{h: cols[h][i] for h in header} for i in range(n)]


class RowErrors(DsrLabError):
    """Some grid points failed; the rows carry the messages."""

    def __init__(self, rows):
        self.rows = list(rows)
        first = self.rows[0]
        super().__init__(f"{len(self.rows)} grid point(s) failed, first at N={first.N}: {first.error}")
