# src/cli/commands.py

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from src.allocation.optimizer import optimize_bipartite_fkr, optimize_fkr
from src.anon.transcript import export_transcript
from src.bits import to_string
from src.cli.config import RunConfig
from src.cli.output import Cell, write_table
from src.errors import ConfigError
from src.netsim.sampler import SeededSampler
from src.protocol.executor import ConferenceKeyResult
from src.protocol.runner import RUN_SUMMARY_HEADER, run_protocol, summary_row, write_run_summary
from src.rates.asymptotic import (
    akr_bipartite,
    akr_fully_bipartite,
    akr_fully_multipartite,
    akr_multipartite,
    fully_advantage_curve,
    multipartite_advantage,
)
from src.rates.finite import gamma_function
from src.witness.fidelity import WitnessReport
from src.witness.tallies import BasisTallies, load_tallies, simulate_tallies


logger = logging.getLogger(__name__)


PathLike = Optional[Union[str, Path]]


def _ratio(top: float, bottom: float) -> float:
    if bottom <= 0.0:
        return math.inf if top > 0.0 else 0.0
    return top / bottom


def _l_tot(config: RunConfig, l_tot: Optional[Sequence[int]]) -> Tuple[int, ...]:
    values = tuple(l_tot) if l_tot else config.l_tot
    if not values:
        raise ConfigError("no values; set l_tot in the configuration or pass --l-tot", field="l_tot")
    return values


# ---------- akr ----------


def cmd_akr(config: RunConfig, out: PathLike = None) -> List[Tuple[str, float]]:
    """Asymptotic rates of the four variants and the two advantage ratios."""
    noise = config.noise
    r_m = akr_multipartite(noise.q_x, noise.q_z)
    r_b = akr_bipartite(noise)
    r_fm = akr_fully_multipartite(noise.q_x, noise.q_z, noise)
    r_fb = akr_fully_bipartite(noise)
    rows = [
        ("r_m", r_m),
        ("r_b", r_b),
        ("r_fully_m", r_fm),
        ("r_fully_b", r_fb),
        ("ratio_m_b", multipartite_advantage(noise)),
        ("ratio_fully_m_b", _ratio(r_fm, r_fb)),
    ]
    write_table(("metric", "value"), rows, out)
    return rows


# ---------- fkr-curve / allocate ----------


def cmd_fkr_curve(
    config: RunConfig, out: PathLike = None, l_tot: Optional[Sequence[int]] = None
) -> List[Tuple[Cell, ...]]:
    """Optimised finite key rates of AQCKA_M and AQCKA_B, one row per L_tot, in input order."""
    gamma_fn = gamma_function(config.gamma_form)
    rows: List[Tuple[Cell, ...]] = []
    for value in _l_tot(config, l_tot):
        alloc = optimize_fkr(value, config.noise, config.eps_tot, config.n_parties, gamma_fn)
        bipartite = optimize_bipartite_fkr(
            value, config.noise, config.eps_tot, config.n_parties, gamma_fn
        )
        rows.append(
            (value, alloc.l_multi, alloc.l_bi, alloc.p, alloc.gamma, alloc.rate, bipartite.rate)
        )
    write_table(("l_tot", "l_multi", "l_bi", "p", "gamma", "rate_m", "rate_b"), rows, out)
    return rows


def cmd_allocate(
    config: RunConfig, out: PathLike = None, l_tot: Optional[Sequence[int]] = None
) -> List[Tuple[Cell, ...]]:
    """Round split of the optimised AQCKA_M operating point."""
    gamma_fn = gamma_function(config.gamma_form)
    rows: List[Tuple[Cell, ...]] = []
    for value in _l_tot(config, l_tot):
        alloc = optimize_fkr(value, config.noise, config.eps_tot, config.n_parties, gamma_fn)
        rows.append((value, alloc.l_multi, alloc.l_id, alloc.l_tkb, alloc.l_pe, alloc.p))
    write_table(("l_tot", "l_multi", "l_id", "l_tkb", "l_pe", "p"), rows, out)
    return rows


# ---------- simulate ----------


def _transcript_path(out: Path, l_tot: int, several: bool) -> Path:
    suffix = f"_{l_tot}" if several else ""
    return out.with_name(f"{out.stem}_transcript{suffix}.csv")


def cmd_simulate(
    config: RunConfig,
    out: PathLike = None,
    seed: Optional[int] = None,
    l_tot: Optional[Sequence[int]] = None,
    transcript: bool = False,
    key_out: PathLike = None,
) -> List[ConferenceKeyResult]:
    """
    Run the configured protocol once per L_tot and write the run summary.

    Aborts are ordinary rows. With ``transcript`` the public transcript of each
    run goes next to the summary; ``key_out`` receives the sender's final key
    of the last successful run as a 0/1 string.
    """
    values = _l_tot(config, l_tot)
    results: List[ConferenceKeyResult] = []
    for value in values:
        result = run_protocol(config.protocol_config(value, seed))
        logger.info(
            "simulate %s l_tot=%d: %s ell=%d",
            config.variant.value,
            value,
            result.status.value,
            result.length,
        )
        results.append(result)

    summary_path = Path(out) if out is not None else None
    if summary_path is not None:
        write_run_summary(results, summary_path)
    else:
        write_table(
            RUN_SUMMARY_HEADER,
            ([summary_row(r)[col] for col in RUN_SUMMARY_HEADER] for r in results),
        )

    if transcript:
        base = summary_path or Path("run.csv")
        for result in results:
            export_transcript(result.transcript, _transcript_path(base, result.l_tot, len(values) > 1))

    if key_out is not None:
        successes = [r for r in results if r.succeeded]
        if successes:
            last = successes[-1]
            sender = config.roles.sender
            Path(key_out).write_text(to_string(last.key_bits[sender]) + "\n", encoding="utf-8")
    return results


# ---------- witness ----------


def cmd_witness(
    tallies: Union[BasisTallies, str, Path], out: PathLike = None
) -> WitnessReport:
    """Stabilizer-witness fidelity bound from a tally file (or loaded tallies)."""
    if not isinstance(tallies, BasisTallies):
        tallies = load_tallies(tallies)
    report = WitnessReport.from_tallies(tallies)
    write_table(
        ("exp_x", "proj_zz", "F"), [(report.exp_x, report.proj_zz, report.fidelity)], out
    )
    if not report.genuine_multipartite:
        logger.warning("F=%.4f does not certify genuine multipartite entanglement", report.fidelity)
    return report


def cmd_simulate_tallies(
    config: RunConfig, rounds: int, out: PathLike = None, seed: Optional[int] = None
) -> BasisTallies:
    """Tally file for the configured GHZ noise, in the format ``witness`` reads."""
    sampler = SeededSampler(config.seed if seed is None else seed).for_path("tallies")
    tallies = simulate_tallies(
        config.n_parties, config.noise.q_x, config.noise.q_z, rounds, sampler
    )
    rows = [("X", outcome, count) for outcome, count in sorted(tallies.x_counts.items())]
    rows += [("Z", outcome, count) for outcome, count in sorted(tallies.z_counts.items())]
    write_table(("basis", "outcome_bits", "count"), rows, out)
    return tallies


# ---------- fully-curve ----------


def cmd_fully_curve(config: RunConfig, out: PathLike = None) -> List[Tuple[float, float]]:
    """r_fully-M / r_fully-B over the configured Q_Z sweep at the configured Q_X."""
    curve = fully_advantage_curve(config.n_parties, config.noise.q_x, config.q_z_sweep)
    write_table(("q_z", "ratio"), curve, out)
    return curve
