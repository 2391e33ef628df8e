#!/usr/bin/env python3
"""
Recompute the two-body nonlocality witness for the reference config.
Run this after changing configs/two_body.cfg and commit a floor a little
below the printed antisymmetric value as W_ANTISYMMETRIC_FLOOR.

Usage (from the repository root): python -m init_scripts.freeze_witness
"""

from services import scenarios
from services.validation import reference_config


def witness_values() -> dict[str, float]:
    """Witness W for the product and antisymmetric states."""
    config = reference_config("two_body")
    return {kind: scenarios.nonlocality_witness(state, config.probe_x1, config.probe_x2_ref,
                                                config.probe_time,
                                                scenarios.witness_sweep(config, state))
            for kind, state in scenarios.two_body_states(config).items()}


if __name__ == "__main__":
    values = witness_values()
    for kind, value in values.items():
        print(f"W[{kind}] = {value:.17g}")
    print(f"\nCommitted floor: W_ANTISYMMETRIC_FLOOR = {scenarios.W_ANTISYMMETRIC_FLOOR}")
    if values["antisymmetric"] <= scenarios.W_ANTISYMMETRIC_FLOOR:
        print("The antisymmetric witness is below the committed floor; update it.")
