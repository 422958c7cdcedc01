"""Optimal portfolio weights across risk aversion, for both friction models.

Reproduces the h-curve and pi_hat(gamma) figure data: a borrowing-spread
market with upward exponential jumps, and a short-rebate market with
downward jumps.  Writes four CSVs next to this script.
"""

import os

import numpy as np

from jumpfolio import (
    DifferentialRates,
    ExponentialNegative,
    ExponentialPositive,
    RegimeMarketParams,
    ShortRebate,
    h_value,
    optimal_portfolio_diffrates,
    optimal_portfolio_short,
)
from jumpfolio.errors import RangeError

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "output")
os.makedirs(OUT, exist_ok=True)
GAMMAS_CURVE = (0.0, 0.25, 0.5, 0.75, 0.9)

# market with a 0.5% borrowing spread; stock drifts down but jumps up
up = RegimeMarketParams(
    r=0.045, mu=-0.05, lam=1.0,
    dist=ExponentialPositive(10.0),
    margin=DifferentialRates(0.045, 0.05),
)
# market with a 2% stock-loan fee; stock drifts up but jumps down
down = RegimeMarketParams(
    r=0.03, mu=0.07, lam=1.0,
    dist=ExponentialNegative(10.0),
    margin=ShortRebate(0.03, 0.05),
)

for tag, params, lo, hi in (("up", up, 0.0, 2.0), ("down", down, -12.0, 1.0)):
    grid = np.linspace(lo, hi, 201)
    curves = np.column_stack(
        [grid] + [[h_value(params, g, p) for p in grid] for g in GAMMAS_CURVE]
    )
    out = os.path.join(OUT, f"h_curves_{tag}.csv")
    header = "pi," + ",".join(f"h_gamma{g:g}" for g in GAMMAS_CURVE)
    np.savetxt(out, curves, delimiter=",", header=header, comments="", fmt="%.17g")
    print(f"wrote {out}")

# pi_hat as a function of gamma; each point also reports its case branch
for tag, params, solver in (
    ("up", up, optimal_portfolio_diffrates),
    ("down", down, optimal_portfolio_short),
):
    rows = []
    for g in np.linspace(0.0, 0.95, 96):
        try:
            opt = solver(params, float(g))
        except RangeError:
            continue  # optimum beyond any finite weight
        rows.append((g, opt.pi, opt.case, opt.zeta))
    out = os.path.join(OUT, f"pi_hat_{tag}.csv")
    np.savetxt(
        out, np.array(rows), delimiter=",",
        header="gamma,pi_hat,case,zeta_hat", comments="", fmt="%.17g",
    )
    first, last = rows[0], rows[-1]
    print(
        f"wrote {out}; pi_hat moves from {first[1]:.4f} (case {int(first[2])}) "
        f"at gamma=0 to {last[1]:.4f} (case {int(last[2])}) at gamma={last[0]:.2f}"
    )
