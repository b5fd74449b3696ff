#!/usr/bin/env python3
"""Small-momentum study: cubic law of the test profile and the speed law
of the converged minimizers.

For each mu the script matches the test-profile amplitude, evaluates the
reduced objective there, descends to the minimizer, and finally fits the
quadratic speed-law coefficient against its closed-form prediction.
"""

import argparse
import os
import time

from gcwaves import (MinimizeConfig, Params, build_eta_star,
                     compute_coefficients, eps_of_mu, eval_J, find_critical,
                     make_grid, minimize, speed_expansion_check,
                     suggest_carrier_multiple, write_profile_csv)
from gcwaves.cli import write_json


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rho", type=float, default=0.5)
    ap.add_argument("--beta-under", type=float, default=0.17)
    ap.add_argument("--beta-over", type=float, default=0.17)
    ap.add_argument("--mus", default="4e-3,2e-3,1e-3")
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--out", default="out/mu_sweep")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    p = Params(args.rho, args.beta_under, args.beta_over)
    rep = find_critical(p)
    if rep.verdict != "Valid":
        raise SystemExit(f"assumption gate failed: {rep.verdict}")
    crit = rep.crit
    c = compute_coefficients(p, crit)
    if not c.focusing:
        raise SystemExit("defocusing regime: no bright solitary waves")
    print(f"k0={crit.k0:.6f} nu0={crit.nu0:.6f} A2={c.a2:.4f} "
          f"A3={c.a3:.4f} A4={c.a4:.4f} I_NLS={c.i_nls:.4f}")

    runs = []
    rows = []
    for mu in (float(s) for s in args.mus.split(",")):
        m = suggest_carrier_multiple(c, crit, mu)
        grid = make_grid(args.n, crit.k0, m)
        eps = eps_of_mu(p, c, crit, grid, mu)
        star = build_eta_star(c, crit, eps, grid, p)
        bd0 = eval_J(star, p, mu)
        cubic = (bd0.j_mu - 2 * crit.nu0 * mu) / mu**3

        t0 = time.time()
        r = minimize(p, c, crit, MinimizeConfig(mu=mu, grid=grid))
        dt = time.time() - t0
        runs.append(r)
        write_profile_csv(os.path.join(args.out, f"minimizer_mu{mu:g}.csv"),
                          r.eta)
        rows.append((mu, eps, cubic, r.breakdown.j_mu, r.speed,
                     (r.speed - crit.nu0) / mu**2, r.iterations, dt))
        print(f"mu={mu:g}: eps={eps:.6g} (J*-2nu0mu)/mu^3={cubic:.4f} "
              f"[I_NLS={c.i_nls:.4f}]  J_min={r.breakdown.j_mu:.10e} "
              f"nu={r.speed:.8f} iters={r.iterations} ({dt:.1f}s)")

    fit = speed_expansion_check(runs, crit, c)
    print(f"speed-law fit: {fit.fitted:.4f}  predicted: {fit.predicted:.4f} "
          f"(rel dev {abs(fit.fitted / fit.predicted - 1):.3f})")
    write_json(os.path.join(args.out, "summary.json"), {
        "k0": crit.k0, "nu0": crit.nu0, "i_nls": c.i_nls,
        "fitted": fit.fitted, "predicted": fit.predicted,
        "rows": [list(r) for r in rows],
    })


if __name__ == "__main__":
    main()
