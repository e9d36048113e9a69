from __future__ import annotations

import logging

from fvdp_analyser.chaos import classify_canard, divergence_profile
from fvdp_analyser.integrator import FIGURE
from fvdp_analyser.model import FIGURE_PARAMS, State
from fvdp_analyser.slowflow import folded_equilibria_frame


def main():
    logging.basicConfig(level=logging.DEBUG)
    print(folded_equilibria_frame(FIGURE_PARAMS).to_markdown(index=False))

    pair = [State(0.0, -0.6752, theta) for theta in (0.41732694, 0.41732695)]
    for s0 in pair:
        outcome = classify_canard(s0, FIGURE_PARAMS, FIGURE)
        print(f"\ntheta0 = {s0.theta}: {outcome.kind}, canard lasted {outcome.duration:.4g}")
        print(" -> ".join(label for label in outcome.labels if label not in ("C", "wrap")))

    profile = divergence_profile(*pair, FIGURE_PARAMS, FIGURE)
    print(f"\nSeparation {profile.separation_at_exit:.3g} at the canard exit t = {profile.exit_time:.6g}")
    print(f"Separation first exceeds 1 at t = {profile.first_exceed:.6g}")


if __name__ == "__main__":
    main()
