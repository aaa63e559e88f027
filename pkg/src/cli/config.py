# src/cli/config.py

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

import numpy as np
import yaml

from src.bits import as_bits
from src.errors import ConfigError, DomainError
from src.netsim.roles import RoleAssignment
from src.protocol.config import KPreMode, ProtocolConfig, Variant
from src.rates.finite import GammaForm
from src.rates.models import NoiseModel, Pair, all_pairs


logger = logging.getLogger(__name__)


DEFAULT_Q_Z_SWEEP: Tuple[float, ...] = (1e-6, 1e-5, 1e-4, 1e-3, 0.005, 0.01, 0.02, 0.05)

TOP_LEVEL_KEYS = frozenset(
    {
        "n_parties", "q_x", "q_z", "pairwise", "ghz_pairwise_z", "channel", "eps_tot",
        "l_tot", "seed", "gamma_form", "protocol", "output", "q_z_sweep",
    }
)
PROTOCOL_KEYS = frozenset(
    {
        "variant", "sender", "keyholders", "q_z_threshold", "k_pre_mode", "k_pre_file",
        "l_multi", "p", "candidates",
    }
)
CHANNEL_KEYS = frozenset({"q_x", "q_z", "pairwise", "ghz_pairwise_z"})
PAIR_RATE_KEYS = frozenset({"q_xb", "q_zb"})


@dataclass(frozen=True)
class RunConfig:
    """
    A validated run configuration file.

    ``noise`` holds the thresholds, ``channel`` the optional true channel.
    One ProtocolConfig per entry of ``l_tot`` comes from ``protocol_config``.
    """

    noise: NoiseModel
    roles: RoleAssignment
    variant: Variant = Variant.AQCKA_M
    l_tot: Tuple[int, ...] = ()
    eps_tot: float = 1e-8
    seed: int = 0
    gamma_form: GammaForm = GammaForm.BINOMIAL_TAIL
    channel: Optional[NoiseModel] = None
    q_z_threshold: Optional[float] = None
    k_pre_mode: KPreMode = KPreMode.TRUSTED
    k_pre: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    l_multi: Optional[int] = None
    p: Optional[float] = None
    candidates: Optional[FrozenSet[int]] = None
    output: Optional[str] = None
    q_z_sweep: Tuple[float, ...] = DEFAULT_Q_Z_SWEEP

    @property
    def n_parties(self) -> int:
        return self.noise.n_parties

    def protocol_config(self, l_tot: int, seed: Optional[int] = None) -> ProtocolConfig:
        return ProtocolConfig(
            variant=self.variant,
            roles=self.roles,
            noise=self.noise,
            l_tot=l_tot,
            eps_tot_target=self.eps_tot,
            seed=self.seed if seed is None else seed,
            q_z_threshold=self.q_z_threshold,
            channel=self.channel,
            gamma_form=self.gamma_form,
            k_pre_mode=self.k_pre_mode,
            k_pre=self.k_pre,
            l_multi=self.l_multi,
            p=self.p,
            candidates=self.candidates,
        )


# ---------- Node helpers ----------


def _line(node: yaml.Node) -> int:
    return node.start_mark.line + 1


def _mapping(node: yaml.Node, name: str, allowed: Optional[FrozenSet[str]] = None) -> Dict[str, yaml.Node]:
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError("expected a mapping", line=_line(node), field=name)
    out: Dict[str, yaml.Node] = {}
    for key_node, value_node in node.value:
        key = str(key_node.value)
        if allowed is not None and key not in allowed:
            raise ConfigError(f"unknown key {key!r}", line=_line(key_node), field=name)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", line=_line(key_node), field=name)
        out[key] = value_node
    return out


def _scalar(node: yaml.Node, name: str) -> str:
    if not isinstance(node, yaml.ScalarNode):
        raise ConfigError("expected a single value", line=_line(node), field=name)
    return str(node.value).strip()


def _float(node: yaml.Node, name: str) -> float:
    raw = _scalar(node, name)
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{raw!r} is not a number", line=_line(node), field=name) from exc


def _int(node: yaml.Node, name: str) -> int:
    raw = _scalar(node, name)
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        value = float(raw)
    except ValueError as exc:
        raise ConfigError(f"{raw!r} is not an integer", line=_line(node), field=name) from exc
    if not value.is_integer():
        raise ConfigError(f"{raw!r} is not an integer", line=_line(node), field=name)
    return int(value)


def _rate(node: yaml.Node, name: str) -> float:
    value = _float(node, name)
    if not (0.0 <= value <= 0.5):
        raise ConfigError(f"{value!r} outside [0, 0.5]", line=_line(node), field=name)
    return value


def _sequence(node: yaml.Node, name: str) -> List[yaml.Node]:
    if isinstance(node, yaml.ScalarNode):
        return [node]
    if not isinstance(node, yaml.SequenceNode):
        raise ConfigError("expected a list", line=_line(node), field=name)
    return list(node.value)


def _pair(text: str, n_parties: int, line: int, name: str) -> Pair:
    try:
        q, t = (int(part) for part in text.split("-"))
    except ValueError as exc:
        raise ConfigError(f"pair key {text!r} is not written q-t", line=line, field=name) from exc
    if not (0 <= q < t < n_parties):
        raise ConfigError(f"pair {text!r} needs 0 <= q < t < {n_parties}", line=line, field=name)
    return (q, t)


# ---------- Sections ----------


def _pair_table(
    node: yaml.Node, n_parties: int, fallback: Tuple[float, float], name: str
) -> Dict[Pair, Tuple[float, float]]:
    entries = _mapping(node, name)
    default = fallback
    if "default" in entries:
        rates = _mapping(entries.pop("default"), f"{name}.default", PAIR_RATE_KEYS)
        default = (
            _rate(rates["q_xb"], f"{name}.default.q_xb") if "q_xb" in rates else fallback[0],
            _rate(rates["q_zb"], f"{name}.default.q_zb") if "q_zb" in rates else fallback[1],
        )
    table = {pair: default for pair in all_pairs(n_parties)}
    for key, value in entries.items():
        pair = _pair(key, n_parties, _line(value), name)
        rates = _mapping(value, f"{name}.{key}", PAIR_RATE_KEYS)
        table[pair] = (
            _rate(rates["q_xb"], f"{name}.{key}.q_xb") if "q_xb" in rates else default[0],
            _rate(rates["q_zb"], f"{name}.{key}.q_zb") if "q_zb" in rates else default[1],
        )
    return table


def _ghz_z_table(node: yaml.Node, n_parties: int, name: str) -> Dict[Pair, float]:
    return {
        _pair(key, n_parties, _line(value), name): _rate(value, f"{name}.{key}")
        for key, value in _mapping(node, name).items()
    }


def _noise(section: Dict[str, yaml.Node], n_parties: int, root: yaml.Node) -> NoiseModel:
    for key in ("q_x", "q_z"):
        if key not in section:
            raise ConfigError("missing", line=_line(root), field=key)
    q_x = _rate(section["q_x"], "q_x")
    q_z = _rate(section["q_z"], "q_z")
    pairwise = (
        _pair_table(section["pairwise"], n_parties, (q_x, q_z), "pairwise")
        if "pairwise" in section
        else {pair: (q_x, q_z) for pair in all_pairs(n_parties)}
    )
    ghz_z = (
        _ghz_z_table(section["ghz_pairwise_z"], n_parties, "ghz_pairwise_z")
        if "ghz_pairwise_z" in section
        else {}
    )
    try:
        return NoiseModel(n_parties, q_x, q_z, pairwise, ghz_z)
    except DomainError as exc:
        raise ConfigError(str(exc), line=_line(root)) from exc


def _channel(node: yaml.Node, noise: NoiseModel) -> NoiseModel:
    section = _mapping(node, "channel", CHANNEL_KEYS)
    q_x = _rate(section["q_x"], "channel.q_x") if "q_x" in section else noise.q_x
    q_z = _rate(section["q_z"], "channel.q_z") if "q_z" in section else noise.q_z
    pairwise = dict(noise.pairwise)
    if "pairwise" in section:
        pairwise = _pair_table(section["pairwise"], noise.n_parties, (q_x, q_z), "channel.pairwise")
    ghz_z = dict(noise.ghz_pairwise_z)
    if "ghz_pairwise_z" in section:
        ghz_z = _ghz_z_table(section["ghz_pairwise_z"], noise.n_parties, "channel.ghz_pairwise_z")
    try:
        return NoiseModel(noise.n_parties, q_x, q_z, pairwise, ghz_z)
    except DomainError as exc:
        raise ConfigError(str(exc), line=_line(node), field="channel") from exc


def _enum(node: yaml.Node, name: str, enum_type):
    raw = _scalar(node, name).lower()
    try:
        return enum_type(raw)
    except ValueError as exc:
        choices = " | ".join(member.value for member in enum_type)
        raise ConfigError(f"{raw!r} is not one of {choices}", line=_line(node), field=name) from exc


def _party_set(node: yaml.Node, name: str) -> FrozenSet[int]:
    return frozenset(_int(item, name) for item in _sequence(node, name))


def _read_k_pre(node: yaml.Node, base_dir: Path) -> np.ndarray:
    path = base_dir / _scalar(node, "protocol.k_pre_file")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}", line=_line(node), field="protocol.k_pre_file") from exc
    try:
        return as_bits("".join(text.split()))
    except ValueError as exc:
        raise ConfigError(
            f"{path} must hold a 0/1 string", line=_line(node), field="protocol.k_pre_file"
        ) from exc


# ---------- Loader ----------


def parse_run_config(text: str, base_dir: Union[str, Path] = ".") -> RunConfig:
    """
    Validate a YAML run configuration.

    Values are read from the composed node tree, so every error can name
    the line it came from.
    """
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {exc}", line=mark.line + 1 if mark else None) from exc
    if root is None:
        raise ConfigError("configuration is empty", line=1)
    top = _mapping(root, "config", TOP_LEVEL_KEYS)

    if "n_parties" not in top:
        raise ConfigError("missing", line=_line(root), field="n_parties")
    n_parties = _int(top["n_parties"], "n_parties")
    if n_parties < 2:
        raise ConfigError(f"{n_parties} must be at least 2", line=_line(top["n_parties"]), field="n_parties")
    noise = _noise(top, n_parties, root)
    channel = _channel(top["channel"], noise) if "channel" in top else None

    eps_tot = _float(top["eps_tot"], "eps_tot") if "eps_tot" in top else 1e-8
    if not (0.0 < eps_tot < 1.0):
        raise ConfigError(f"{eps_tot!r} outside (0, 1)", line=_line(top["eps_tot"]), field="eps_tot")
    l_tot = tuple(_int(item, "l_tot") for item in _sequence(top["l_tot"], "l_tot")) if "l_tot" in top else ()
    for value in l_tot:
        if value < 1:
            raise ConfigError(f"{value} must be positive", line=_line(top["l_tot"]), field="l_tot")
    seed = _int(top["seed"], "seed") if "seed" in top else 0
    if not (0 <= seed < 2**64):
        raise ConfigError(f"{seed} is not an unsigned 64-bit seed", line=_line(top["seed"]), field="seed")
    gamma_form = _enum(top["gamma_form"], "gamma_form", GammaForm) if "gamma_form" in top else GammaForm.BINOMIAL_TAIL
    output = _scalar(top["output"], "output") if "output" in top else None
    q_z_sweep = (
        tuple(_rate(item, "q_z_sweep") for item in _sequence(top["q_z_sweep"], "q_z_sweep"))
        if "q_z_sweep" in top
        else DEFAULT_Q_Z_SWEEP
    )

    protocol_node = top.get("protocol")
    proto = _mapping(protocol_node, "protocol", PROTOCOL_KEYS) if protocol_node is not None else {}
    variant = _enum(proto["variant"], "protocol.variant", Variant) if "variant" in proto else Variant.AQCKA_M
    sender = _int(proto["sender"], "protocol.sender") if "sender" in proto else 0
    keyholders = (
        _party_set(proto["keyholders"], "protocol.keyholders")
        if "keyholders" in proto
        else frozenset(range(n_parties))
    )
    roles_line = _line(protocol_node) if protocol_node is not None else _line(root)
    try:
        roles = RoleAssignment(n_parties=n_parties, sender=sender, keyholders=keyholders)
    except DomainError as exc:
        raise ConfigError(str(exc), line=roles_line, field="protocol.keyholders") from exc

    k_pre_mode = _enum(proto["k_pre_mode"], "protocol.k_pre_mode", KPreMode) if "k_pre_mode" in proto else KPreMode.TRUSTED
    k_pre = _read_k_pre(proto["k_pre_file"], Path(base_dir)) if "k_pre_file" in proto else None

    config = RunConfig(
        noise=noise,
        roles=roles,
        variant=variant,
        l_tot=l_tot,
        eps_tot=eps_tot,
        seed=seed,
        gamma_form=gamma_form,
        channel=channel,
        q_z_threshold=_rate(proto["q_z_threshold"], "protocol.q_z_threshold") if "q_z_threshold" in proto else None,
        k_pre_mode=k_pre_mode,
        k_pre=k_pre,
        l_multi=_int(proto["l_multi"], "protocol.l_multi") if "l_multi" in proto else None,
        p=_float(proto["p"], "protocol.p") if "p" in proto else None,
        candidates=_party_set(proto["candidates"], "protocol.candidates") if "candidates" in proto else None,
        output=output,
        q_z_sweep=q_z_sweep,
    )

    for value in l_tot:
        try:
            config.protocol_config(value)
        except DomainError as exc:
            raise ConfigError(str(exc), line=roles_line, field="protocol") from exc
    return config


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Read and validate a configuration file; relative paths inside it resolve next to it."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    config = parse_run_config(text, base_dir=path.parent)
    logger.debug("loaded %s: N=%d variant=%s", path, config.n_parties, config.variant.value)
    return config
