"""Figure recipes: committed YAML files, each a list of output panels."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import yaml

from . import sweep
from .config import parse_config
from .errors import ConfigError

FIGURES = (3, 4, 5, 6, 9)
PANEL_KINDS = ("sweep", "ntmax", "populations", "crossover")


def recipe_text(figure: int) -> str:
    if int(figure) not in FIGURES:
        raise ConfigError("figure", f"no recipe for figure {figure}; choose from {FIGURES}")
    return resources.files("dsr_lab.figures").joinpath(f"fig{int(figure)}.yaml").read_text("utf-8")


def load_recipe(figure: int) -> dict:
    raw = yaml.safe_load(recipe_text(figure))
    panels = raw.get("panels")
    if not isinstance(panels, list) or not panels:
        raise ConfigError("panels", "recipe must list at least one panel")
    for i, p in enumerate(panels):
        if p.get("kind") not in PANEL_KINDS:
            raise ConfigError(f"panels[{i}].kind", f"expected one of {PANEL_KINDS}")
        if not isinstance(p.get("name"), str):
            raise ConfigError(f"panels[{i}].name", "missing panel name")
    return raw


def crossover_records(specs) -> list[dict]:
    out = []
    for i, spec in enumerate(specs):
        unknown = set(spec) - {"a", "b", "bracket"}
        if unknown:
            raise ConfigError(f"crossovers[{i}].{sorted(unknown)[0]}", "unknown key")
        try:
            a, b = sweep.curve(spec["a"]), sweep.curve(spec["b"])
            lo, hi = spec["bracket"]
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"crossovers[{i}]", str(exc)) from None
        n_star = sweep.find_crossover(a, b, (lo, hi))
        out.append({"a": _label(spec["a"]), "b": _label(spec["b"]), "lo": float(lo),
                    "hi": float(hi), "N_star": n_star})
    return out


def _label(spec):
    if isinstance(spec, dict):
        return ";".join(f"{k}={v}" for k, v in spec.items())
    return str(spec)


CROSSOVER_COLUMNS = ("a", "b", "lo", "hi", "N_star")
POPULATION_KEYS = {"N", "nmax", "beta", "sigma", "n_t", "quad_order"}


def run_panel(panel: dict, out_dir: Path, jobs=None) -> list[Path]:
    name, kind = panel["name"], panel["kind"]
    csv_path = out_dir / f"{name}.csv"
    if kind == "sweep":
        config = parse_config(panel["config"])
        rows = sweep.run_sweep(config, jobs)
        written = sweep.emit(rows, config, csv_path, out_dir / f"{name}.json")
        failed = [r for r in rows if r.error]
        if failed:
            raise sweep.RowErrors(failed)
        return written
    if kind == "ntmax":
        config = parse_config(panel["config"], require_noise=False)
        text = sweep.table_csv(sweep.NTMAX_COLUMNS, sweep.run_ntmax(config, jobs))
    elif kind == "populations":
        params = panel.get("params", {})
        unknown = set(params) - POPULATION_KEYS
        if unknown:
            raise ConfigError(f"{name}.params.{sorted(unknown)[0]}", "unknown key")
        header, records = sweep.table_records(sweep.population_table(**params))
        text = sweep.table_csv(header, records)
    else:
        text = sweep.table_csv(CROSSOVER_COLUMNS, crossover_records(panel["crossovers"]))
    sweep.write_text(csv_path, text)
    return [csv_path]


def reproduce_figure(figure: int, out_dir, jobs=None) -> list[Path]:
    out_dir = Path(out_dir)
    written, failed = [], []
    for panel in load_recipe(figure)["panels"]:
        try:
            written += run_panel(panel, out_dir, jobs)
        except sweep.RowErrors as exc:
            failed += exc.rows
    if failed:
        raise sweep.RowErrors(failed)
    return written
