"""Scenario execution: wire the plants, controller and loop together,
write the run artifacts, and expose the certification suites."""

import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import cosim
from .config import ScenarioConfig
from .modes import Mode
from .verify import SuiteReport, run_all

OUT_DIR_ENV = "HYBRIDFO_OUT_DIR"

PLOT_FILES = ("plot_tracking.csv", "plot_components.csv", "plot_availability.csv")


@dataclass(frozen=True)
class ScenarioResult:
    exit_code: int
    summary: dict
    out_dir: Path
    log: cosim.SimLog


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "out"))


def run_scenario(
    cfg: ScenarioConfig,
    out_dir: Path | str | None = None,
    seed: int | None = None,
    horizon_s: float | None = None,
) -> ScenarioResult:
    """Run the closed loop and write log.csv, summary.txt and plot data.

    Exit code 0 when no step errored and the summary thresholds hold.
    """
    if horizon_s is not None:
        cfg = replace(cfg, horizon_s=horizon_s)
    out = Path(out_dir) if out_dir is not None else default_out_dir()
    out.mkdir(parents=True, exist_ok=True)

    log = cosim.run(cfg, seed=seed)
    log.to_csv(out / "log.csv")
    _write_plot_data(log, out)

    summary = summarize(log, cfg)
    (out / "summary.txt").write_text(_render_summary(summary), encoding="utf-8")
    exit_code = 0 if summary["thresholds_met"] else 1
    return ScenarioResult(exit_code=exit_code, summary=summary, out_dir=out, log=log)


def summarize(log: cosim.SimLog, cfg: ScenarioConfig) -> dict:
    if len(log) == 0:
        return {
            "steps": 0,
            "rmse_kw": 0.0,
            "max_abs_error_kw": 0.0,
            "soc_start": cfg.battery.soc0,
            "soc_end": cfg.battery.soc0,
            "qp_optimal_pct": 100.0,
            "rmse_pct_of_demand": 0.0,
            "thresholds_met": True,
            "settle_s": cfg.summary.settle_s,
        }
    t = log.column("t_s").astype(float)
    err = log.column("tracking_error_kw").astype(float)
    demand = log.column("demand_kw").astype(float)
    soc = log.column("batt_soc").astype(float)
    status = log.column("qp_status")

    settled = t >= cfg.summary.settle_s
    if not np.any(settled):
        settled = np.ones_like(t, dtype=bool)
    rmse = float(np.sqrt(np.mean(err[settled] ** 2)))
    mean_demand = float(np.mean(demand[settled]))
    rmse_pct = 100.0 * rmse / mean_demand if mean_demand > 0 else 0.0
    optimal_pct = 100.0 * float(np.mean(status == "optimal"))

    return {
        "steps": len(log),
        "rmse_kw": rmse,
        "max_abs_error_kw": float(np.max(np.abs(err[settled]))),
        "soc_start": float(soc[0]),
        "soc_end": float(soc[-1]),
        "qp_optimal_pct": optimal_pct,
        "rmse_pct_of_demand": rmse_pct,
        "thresholds_met": rmse_pct <= cfg.summary.rmse_pct_max,
        "settle_s": cfg.summary.settle_s,
    }


def _render_summary(summary: dict) -> str:
    lines = [
        f"steps                 = {summary['steps']}",
        f"settle_s              = {summary['settle_s']:.6g}",
        f"tracking_rmse_kw      = {summary['rmse_kw']:.6g}",
        f"tracking_rmse_pct     = {summary['rmse_pct_of_demand']:.6g}",
        f"max_abs_error_kw      = {summary['max_abs_error_kw']:.6g}",
        f"soc_start             = {summary['soc_start']:.6g}",
        f"soc_end               = {summary['soc_end']:.6g}",
        f"qp_optimal_pct        = {summary['qp_optimal_pct']:.6g}",
        f"thresholds_met        = {summary['thresholds_met']}",
    ]
    return "\n".join(lines) + "\n"


def _write_plot_data(log: cosim.SimLog, out: Path) -> None:
    """One file per figure-style panel, plain CSV."""
    if len(log) == 0:
        for name, header in zip(
            PLOT_FILES,
            (
                "t_s,demand_kw,delivered_kw",
                "t_s,y_wl_kw,y_wb_kw,y_sl_kw,y_sb_kw,y_b_kw,batt_soc",
                "t_s,avail_wind_kw,wind_kw,avail_solar_kw,solar_kw",
            ),
        ):
            (out / name).write_text(header + "\n", encoding="utf-8")
        return
    t = log.column("t_s")
    demand = log.column("demand_kw")
    err = log.column("tracking_error_kw")
    delivered = demand + err
    cols = {name: log.column(name) for name in ("y_wl_kw", "y_wb_kw", "y_sl_kw", "y_sb_kw", "y_b_kw", "batt_soc", "avail_wind_kw", "avail_solar_kw")}

    def write(name: str, header: str, arrays) -> None:
        with open(out / name, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(header + "\n")
            for row in zip(*arrays):
                handle.write(",".join(f"{v:.6g}" for v in row) + "\n")

    write("plot_tracking.csv", "t_s,demand_kw,delivered_kw", (t, demand, delivered))
    write(
        "plot_components.csv",
        "t_s,y_wl_kw,y_wb_kw,y_sl_kw,y_sb_kw,y_b_kw,batt_soc",
        (t, cols["y_wl_kw"], cols["y_wb_kw"], cols["y_sl_kw"], cols["y_sb_kw"], cols["y_b_kw"], cols["batt_soc"]),
    )
    write(
        "plot_availability.csv",
        "t_s,avail_wind_kw,wind_kw,avail_solar_kw,solar_kw",
        (
            t,
            cols["avail_wind_kw"],
            cols["y_wl_kw"] + cols["y_wb_kw"],
            cols["avail_solar_kw"],
            cols["y_sl_kw"] + cols["y_sb_kw"],
        ),
    )


def run_verify(cfg: ScenarioConfig, seed: int | None = None) -> tuple[int, list[SuiteReport]]:
    """Run the certification suites sized by the config's verify block."""
    v = cfg.verify
    reports = run_all(
        n_oracle=v.n_oracle,
        n_invariance_starts=v.n_invariance_starts,
        invariance_steps=v.invariance_steps,
        n_gradient_points=v.n_gradient_points,
        seed=v.seed if seed is None else seed,
    )
    exit_code = 0 if all(r.passed for r in reports) else 1
    return exit_code, reports
