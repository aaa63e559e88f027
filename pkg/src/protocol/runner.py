# src/protocol/runner.py

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path
from typing import Callable, Dict, Iterable, Union

from src.protocol.bipartite import run_aqcka_b, run_fully_aqcka_b
from src.protocol.config import ProtocolConfig, Variant
from src.protocol.executor import ConferenceKeyResult
from src.protocol.multipartite import run_aqcka_m, run_fully_aqcka_m


logger = logging.getLogger(__name__)


RUN_SUMMARY_HEADER = (
    "variant", "n", "l_tot", "l_multi", "l_bi", "p", "qx_obs", "status", "ell", "rate", "seed",
)

_RUNNERS: Dict[Variant, Callable[[ProtocolConfig], ConferenceKeyResult]] = {
    Variant.AQCKA_M: run_aqcka_m,
    Variant.AQCKA_B: run_aqcka_b,
    Variant.FULLY_AQCKA_M: run_fully_aqcka_m,
    Variant.FULLY_AQCKA_B: run_fully_aqcka_b,
}


def run_protocol(config: ProtocolConfig) -> ConferenceKeyResult:
    """Run whichever variant ``config`` names."""
    result = _RUNNERS[config.variant](config)
    logger.debug(
        "run %s seed=%d finished: %s, ell=%d",
        config.variant.value,
        config.seed,
        result.status.value,
        result.length,
    )
    return result


def format_number(value: float) -> str:
    """12 significant digits; integers stay integral."""
    if isinstance(value, int):
        return str(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".12g")


def summary_row(result: ConferenceKeyResult) -> Dict[str, str]:
    return {
        "variant": result.variant.value,
        "n": str(result.n_parties),
        "l_tot": str(result.l_tot),
        "l_multi": str(result.l_multi),
        "l_bi": str(result.l_bi),
        "p": format_number(float(result.p)),
        "qx_obs": format_number(float(result.qx_obs)),
        "status": result.status.value,
        "ell": str(result.length),
        "rate": format_number(float(result.rate)),
        "seed": str(result.seed),
    }


def write_run_summary(
    results: Iterable[ConferenceKeyResult], path: Union[str, Path]
) -> None:
    """One ``variant,n,l_tot,l_multi,l_bi,p,qx_obs,status,ell,rate,seed`` row per run."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=RUN_SUMMARY_HEADER, lineterminator="\n")
        writer.writeheader()
        for result in results:
            writer.writerow(summary_row(result))
