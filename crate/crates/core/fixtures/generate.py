#!/usr/bin/env python3
"""Regenerates the bundled fixtures. Run from any directory."""

import json
import math
from pathlib import Path

HERE = Path(__file__).resolve().parent

CELL = 100.0
X0, X1 = -2500.0, 8000.0
Y0, Y1 = -1000.0, 2500.0
TOWER_HEIGHT = 30.0
ATTACH = 28.0
SAG = 1.01
TARGET_LENGTH = 10500.0


def elevation(x, y):
    return 380.0 + 0.002 * x + 10.0 * math.sin(y / 900.0)


def raster():
    cols = int(round((X1 - X0) / CELL)) + 1
    rows = int(round((Y1 - Y0) / CELL)) + 1
    return {
        "origin": [X0, Y0],
        "cell_size": CELL,
        "rows": [
            [round(elevation(X0 + c * CELL, Y0 + r * CELL), 3) for c in range(cols)]
            for r in range(rows)
        ],
    }


def bilinear(terrain, x, y):
    u = (x - X0) / CELL
    v = (y - Y0) / CELL
    c0 = min(int(math.floor(u)), len(terrain["rows"][0]) - 2)
    r0 = min(int(math.floor(v)), len(terrain["rows"]) - 2)
    fu, fv = u - c0, v - r0
    z = terrain["rows"]
    return (
        z[r0][c0] * (1 - fu) * (1 - fv)
        + z[r0][c0 + 1] * fu * (1 - fv)
        + z[r0 + 1][c0] * (1 - fu) * fv
        + z[r0 + 1][c0 + 1] * fu * fv
    )


def line(prefix, points, terrain, hover_detail=()):
    towers = []
    for i, (x, y) in enumerate(points):
        towers.append(
            {
                "id": f"{prefix}-T{i:02}",
                "position": [x, y, round(bilinear(terrain, x, y), 6)],
                "height": TOWER_HEIGHT,
                **({"hover_detail": True} if i in hover_detail else {}),
            }
        )
    spans = [
        {
            "id": f"{prefix}-S{i:02}",
            "tower_a": towers[i]["id"],
            "tower_b": towers[i + 1]["id"],
            "attachment_height": ATTACH,
            "sag_factor": SAG,
        }
        for i in range(len(towers) - 1)
    ]
    return towers, spans


def span_len(ta, tb):
    a, b = ta["position"], tb["position"]
    return SAG * math.dist(a, b)


def total_length(towers, spans):
    by_id = {t["id"]: t for t in towers}
    return sum(span_len(by_id[s["tower_a"]], by_id[s["tower_b"]]) for s in spans)


def atlas():
    terrain = raster()
    # West line: multirotor country, one tower with hardware needing a hover look.
    l2 = [(-1800.0 + 300.0 * i, -300.0) for i in range(11)]
    # North line carrying the charging station.
    l3 = [(-600.0, 200.0 + 320.0 * i) for i in range(6)]

    def feeder(end_x):
        xs = [1600.0 + 580.0 * i for i in range(10)] + [end_x]
        return [(x, 600.0) for x in xs]

    def build(end_x):
        towers, spans = [], []
        for prefix, pts, hover in (("L1", feeder(end_x), ()), ("L2", l2, (4,)), ("L3", l3, ())):
            t, s = line(prefix, pts, terrain, hover)
            towers += t
            spans += s
        return towers, spans

    lo, hi = 6800.0, 7900.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total_length(*build(mid)) < TARGET_LENGTH:
            lo = mid
        else:
            hi = mid
    end_x = round(0.5 * (lo + hi), 4)
    towers, spans = build(end_x)
    return {
        "format_version": 1,
        "towers": towers,
        "spans": spans,
        "stations": [
            {
                "id": "CS-1",
                "span_id": "L3-S02",
                "offset_fraction": 0.5,
                "harvest_mode": "optimized",
                "primary_current": 200.0,
            }
        ],
        "terrain": terrain,
        "gcs": [0.0, 0.0, round(bilinear(terrain, 0.0, 0.0), 6)],
        "wind": [2.0, -1.0],
    }


# Multirotor figures are calibration constants in the range of a DJI M210
# class airframe; the fixed-wing VTOL follows a DeltaQuad class airframe with
# cruise above 20 m/s and the MARVIN stall and wing data.
MULTIROTOR = {
    "kind": "multirotor",
    "mass": 4.8,
    "battery_capacity": 350.0,
    "hover_power": 700.0,
    "parasite_coeff": 0.03,
    "v_inspect": 12.0,
    "v_cruise": 17.0,
    "v_vertical": 3.0,
    "max_wind": 12.0,
    "landing_duration": 20.0,
    "takeoff_duration": 10.0,
}

FIXED_WING = {
    "id": "deltaquad",
    "kind": "fixed_wing_vtol",
    "mass": 6.2,
    "battery_capacity": 600.0,
    "hover_power": 1400.0,
    "parasite_coeff": 0.02,
    "cruise_power": 260.0,
    "v_inspect": 18.0,
    "v_cruise": 20.0,
    "v_vertical": 3.0,
    "v_stall_base": 13.3,
    "wing_surface_base": 0.527,
    "wing_surface_extended": 0.527,
    "max_wind": 12.0,
    "landing_duration": 25.0,
    "takeoff_duration": 15.0,
    "transit_buffer": 50.0,
}


def atlas_fleet():
    return {
        "format_version": 1,
        "platforms": [
            {"id": "m210-a", **MULTIROTOR, "transit_buffer": 35.0},
            {"id": "m210-b", **MULTIROTOR, "transit_buffer": 40.0},
            FIXED_WING,
        ],
    }


def atlas_scenario():
    return {
        "format_version": 1,
        "wind": [2.0, -1.0],
        "rng_seed": 7,
        "time_step": 0.5,
        "anomalies": [
            {"kind": "foreign_object", "span_id": "L1-S03", "offset_fraction": 0.4},
            {"kind": "missing_diverter", "span_id": "L2-S06", "offset_fraction": 0.75},
            {"kind": "vegetation_encroachment", "span_id": "L3-S01", "offset_fraction": 0.2,
             "detect_probability": 0.9},
        ],
    }


# Morpho: 3.5 kg, about 8 km/h vertical and 60 km/h horizontal, around
# 17 minutes of flight, cleared to 9 m/s wind. Power is calibrated so a full
# battery hovers for 1020 s.
MORPHO = {
    "id": "morpho",
    "kind": "morphing_vtol",
    "mass": 3.5,
    "battery_capacity": 100.0,
    "hover_power": 353.0,
    "parasite_coeff": 0.02,
    "cruise_power": 150.0,
    "v_inspect": 12.0,
    "v_cruise": 16.67,
    "v_vertical": 2.22,
    "v_stall_base": 9.0,
    "wing_surface_base": 0.3,
    "wing_surface_extended": 0.4,
    "max_wind": 9.0,
    "landing_duration": 15.0,
    "takeoff_duration": 10.0,
}

MARVIN = {
    "id": "marvin",
    "kind": "morphing_vtol",
    "mass": 5.0,
    "battery_capacity": 200.0,
    "hover_power": 900.0,
    "parasite_coeff": 0.02,
    "cruise_power": 220.0,
    "v_inspect": 16.0,
    "v_cruise": 22.0,
    "v_stall_base": 13.3,
    "wing_surface_base": 0.527,
    "wing_surface_extended": 0.709,
    "max_wind": 12.0,
    "landing_duration": 20.0,
    "takeoff_duration": 10.0,
}


def minimal_grid():
    terrain = {
        "origin": [-500.0, -500.0],
        "cell_size": 100.0,
        "rows": [[100.0] * 11 for _ in range(11)],
    }
    return {
        "format_version": 1,
        "towers": [
            {"id": "A", "position": [100.0, 0.0, 100.0], "height": 25.0},
            {"id": "B", "position": [300.0, 0.0, 100.0], "height": 25.0},
            {"id": "C", "position": [300.0, 200.0, 100.0], "height": 25.0},
        ],
        "spans": [
            {"id": "AB", "tower_a": "A", "tower_b": "B", "attachment_height": 20.0},
            {"id": "BC", "tower_a": "B", "tower_b": "C", "attachment_height": 20.0},
        ],
        "terrain": terrain,
        "gcs": [0.0, 0.0, 100.0],
    }


def write(name, value):
    (HERE / name).write_text(json.dumps(value, indent=2) + "\n")


if __name__ == "__main__":
    write("atlas_grid.json", atlas())
    write("atlas_fleet.json", atlas_fleet())
    write("atlas_scenario.json", atlas_scenario())
    write("morpho_fleet.json", {"format_version": 1, "platforms": [MORPHO]})
    write("marvin_fleet.json", {"format_version": 1, "platforms": [MARVIN]})
    write("minimal_grid.json", minimal_grid())
    write("minimal_fleet.json", {"format_version": 1,
                                 "platforms": [{"id": "quad", **MULTIROTOR}]})
    write("calm_scenario.json", {"format_version": 1, "wind": [0.0, 0.0], "rng_seed": 1})
