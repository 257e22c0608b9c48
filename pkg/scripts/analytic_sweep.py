"""Absorption time of a content item in device caches versus audience size.

Birth rates grow with the number of interested users while the service
rate stays fixed, so T_1 rises until births outpace services and the item
effectively never leaves the caches. Finite values are checked against a
Monte Carlo estimate.
"""
import argparse

import numpy as np

from ccndtn.analytic import ServiceRateParams, absorption_time, chain_from_model, monte_carlo_absorption
from ccndtn.workload import zipf_pmf


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rank", type=int, default=1, help="Zipf rank of the item (catalog of 1000)")
    ap.add_argument("--max-users", type=int, default=10)
    ap.add_argument("--walks", type=int, default=20_000)
    args = ap.parse_args()

    pi = float(zipf_pmf(1000, 1.0)[args.rank - 1])
    params = ServiceRateParams(pi, 0.3, 0.02, 1.0, 1.0, 1.0, [0.5, 0.5])
    profiles = np.random.default_rng(0).uniform(0.05, 0.4, args.max_users)
    print(f"pi_c={pi:.6f}, service rate {pi * (1.0 + 0.3 + 0.02 * 0.25):.6f}")
    print("users  T_1 (series)   truncation bound  T_1 (monte carlo)")
    for users in range(1, args.max_users + 1):
        chain = chain_from_model(profiles[:users], params, n_max=80)
        t = absorption_time(chain, 1)
        if t.infinite or t.value > 1e5:
            print(f"{users:<6} {float(t):12.4g}   {t.truncation_bound:16.3g}  (not simulated)")
            continue
        mc = monte_carlo_absorption(chain, 1, walks=args.walks, rng=np.random.default_rng(users))
        print(f"{users:<6} {t.value:12.4f}   {t.truncation_bound:16.3g}  {mc:12.4f}")


if __name__ == "__main__":
    main()
