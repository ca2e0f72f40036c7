"""How the headline numbers move with the unit and coupling conventions.

Prints, for a few multipliers of the optomechanical coupling ``g0`` (and of the
drive ``drive_e``), the steady discord in bits and nats at eta = 0.25,
n_m = 240, the entanglement thresholds at eta = 0 and 0.25, the crossing point
of the two negativity curves, and the onset times of discord and four-mode
negativity during the relaxation from thermal mechanics.

    python scripts/convention_scan.py
"""

import argparse
import math

import numpy as np

from cvgn.analysis import compute_metrics, find_threshold, first_crossing, steady_state, sweep, transient
from cvgn.errors import CVGNError
from cvgn.network import FullParams


def crossing(base):
    grid = np.arange(150.0, 281.0, 1.0)
    e0 = sweep(base.replace(eta=0.0), "n_m", grid, ["ln_oooo_mm"]).metrics["ln_oooo_mm"]
    e25 = sweep(base.replace(eta=0.25), "n_m", grid, ["ln_oooo_mm"]).metrics["ln_oooo_mm"]
    diff = e0 - e25
    nz = np.nonzero(diff)[0]
    for a, b in zip(nz[:-1], nz[1:]):
        if np.sign(diff[a]) != np.sign(diff[b]):
            return grid[a] + (grid[b] - grid[a]) * diff[a] / (diff[a] - diff[b])
    return math.nan


def onsets(base, t_final_kappa):
    res = transient(base.replace(eta=0.25, n_m=240.0), t_final_kappa, n_samples=int(200 * t_final_kappa))
    ln = res.metrics["ln_oooo_mm"]
    t_d = first_crossing(res.grid, res.metrics["discord_o1o2"], 1e-6)
    t_e = first_crossing(res.grid, ln, 1e-6)
    # first onset after the initial blip has died out
    late = np.nonzero((res.grid > 0.1) & (ln > 1e-6))[0]
    return t_d, t_e, (res.grid[late[0]] if len(late) else None)


def row(label, base, t_final_kappa):
    c = steady_state(base.replace(eta=0.25, n_m=240.0))
    bits = compute_metrics(c, "full", ["discord_o1o2"])["discord_o1o2"]
    nats = compute_metrics(c, "full", ["discord_o1o2"], base=math.e)["discord_o1o2"]
    try:
        n0 = find_threshold(base.replace(eta=0.0), search_interval=(0.0, 500.0))
        n25 = find_threshold(base.replace(eta=0.25), search_interval=(0.0, 500.0))
    except CVGNError:
        n0 = n25 = math.nan
    t_d, t_e, t_late = onsets(base, t_final_kappa)
    fmt = lambda t: "-" if t is None else f"{t:.3g}"  # noqa: E731
    print(
        f"{label:14s} {bits:9.6f} {nats:9.6f} {n0:8.1f} {n25:8.1f} {crossing(base):8.1f} "
        f"{fmt(t_d):>8s} {fmt(t_e):>8s} {fmt(t_late):>8s}"
    )


def main():
    parser = argparse.ArgumentParser(description="convention sensitivity scan")
    parser.add_argument("--t-final", type=float, default=30.0, help="transient horizon in 1/kappa")
    args = parser.parse_args()
    print(f"{'setting':14s} {'D bits':>9s} {'D nats':>9s} {'n_th(0)':>8s} {'n_th(.25)':>8s} {'cross':>8s} "
          f"{'t_D':>8s} {'t_LN':>8s} {'t_LN>0.1':>8s}")
    base = FullParams()
    for f in (1.0, 1.01, 1.02, 1.03, 1.032, 1.04):
        row(f"g0 x {f:g}", base.replace(g0=base.g0 * f), args.t_final)
    row("drive_e x 1.03", base.replace(drive_e=base.drive_e * 1.03), args.t_final)


if __name__ == "__main__":
    main()
