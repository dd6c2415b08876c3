"""Unit conventions and the single place where they are converted.

Powers are kW, energies kWh, time steps seconds. Energy laws work in
hours, so every seconds-to-hours conversion goes through here.
"""

SECONDS_PER_HOUR = 3600.0
KW_PER_MW = 1000.0


def seconds_to_hours(dt_s: float) -> float:
    return dt_s / SECONDS_PER_HOUR


def mw_to_kw(p_mw: float) -> float:
    return p_mw * KW_PER_MW
