import json

import numpy as np

from src.netsim.roles import RoleAssignment
from src.protocol.config import ProtocolConfig, Variant
from src.protocol.runner import run_protocol
from src.rates.models import NoiseModel


def print_event_log(event_log):
    """Pretty-print the structured run events."""
    print("\n=== RUN EVENT LOG ===")
    for ev in event_log:
        print(json.dumps(ev.to_dict(), indent=2))


def run_conference_scenario():
    """
    One noiseless AQCKA_M run: four parties, party 1 sends, parties 0, 1 and 3
    end up sharing the key.
    """
    config = ProtocolConfig(
        variant=Variant.AQCKA_M,
        roles=RoleAssignment.of(4, 1, {0, 1, 3}),
        noise=NoiseModel.noiseless(4),
        l_tot=100_000,
        seed=1,
    )
    return run_protocol(config)


def main():
    print("\nStarting Conclave walking skeleton\n")

    result = run_conference_scenario()

    print("=== FINAL STATUS ===")
    print("Status:", result.status.value)
    print("Key length:", result.length, "rate:", round(result.rate, 4))
    print("Split: l_multi =", result.l_multi, "l_bi =", result.l_bi, "p =", round(result.p, 5))

    print_event_log(result.events)

    keys = list(result.key_bits.values())
    print("\nKeyholders agree?", all(np.array_equal(keys[0], key) for key in keys))

    # transcript chain before and after tampering
    chain = result.transcript.chain
    print("\n=== TRANSCRIPT CHAIN ===")
    print("Records:", len(result.transcript), "tip:", chain.tip())
    print("Integrity OK?", chain.verify_integrity())
    if len(chain.chain) > 1:
        chain.chain[1]["record"]["payload_hex"] = "ff"
    print("Integrity OK after tamper?", chain.verify_integrity())

    print("\nEnd of run\n")


if __name__ == "__main__":
    main()
