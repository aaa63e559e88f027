# tests/test_end_to_end.py

from __future__ import annotations

import numpy as np
import pytest

from src.netsim.roles import RoleAssignment
from src.protocol.config import ProtocolConfig, Variant
from src.protocol.runner import run_protocol
from src.protocol.state_machine import RunStatus
from src.rates.models import NoiseModel


pytestmark = pytest.mark.slow


THRESHOLDS = NoiseModel.symmetric(4, 0.0304, 0.01589, q_xb=0.0304, q_zb=0.0144)
CHANNEL = NoiseModel.symmetric(4, 0.0254, 0.0144, q_xb=0.02, q_zb=0.012)


def test_aqcka_m_at_full_size() -> None:
    config = ProtocolConfig(
        variant=Variant.AQCKA_M,
        roles=RoleAssignment.of(4, 1, {0, 1, 3}),
        noise=THRESHOLDS,
        channel=CHANNEL,
        l_tot=6_500_000,
        seed=2024,
    )
    result = run_protocol(config)

    assert result.status is RunStatus.SUCCESS
    assert result.length == pytest.approx(3.0e6, rel=0.1)
    assert result.qx_obs < 0.0304
    keys = [result.key_bits[party] for party in (0, 1, 3)]
    assert all(np.array_equal(keys[0], key) for key in keys[1:])
    assert 2 not in result.key_bits
    assert all(0 <= left < 5 for left in result.residual.values())
    assert result.transcript.chain.verify_integrity()
