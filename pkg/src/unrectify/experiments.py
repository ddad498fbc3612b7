"""End-to-end experiment harness behind the CLI.

Both experiments build a fusion stack, push a fixed sample matrix through
it, and emit CSV suitable for plotting. Outputs are pure functions of the
configuration: the same flags and seed always give the same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .builders import build_fusion_stack, fusion_stack_channels
from .engine import forward_batch
from .graph import DagNet
from .partition import partition_census
from .rng import standard_normal, uniform
from .stability import (
    all_pairs_level_gains,
    scale_to_stability,
    stability_certificate,
)

__all__ = [
    "PartitionConfig",
    "StabilityConfig",
    "run_partition_experiment",
    "run_stability_experiment",
    "PAIR_SAMPLE_LIMIT",
]

# all unordered pairs up to this many samples; beyond it a fixed-size
# random pair subsample keeps the scan tractable
PAIR_SAMPLE_LIMIT = 2_000
PAIR_SUBSAMPLE = 2_000_000


def _fmt(value: float) -> str:
    return f"{value:.12g}"


@dataclass(frozen=True)
class PartitionConfig:
    layers: int = 5
    dim: int = 14
    samples: int = 5_000
    seed: int = 7

    def __post_init__(self):
        if self.layers < 1 or self.dim < 1 or self.samples < 1:
            raise ValueError("layers, dim and samples must be positive")


def run_partition_experiment(cfg: PartitionConfig) -> str:
    """Census CSV for the top, bottom, and fused channel of every layer."""
    net = build_fusion_stack(cfg.layers, cfg.dim, cfg.seed)
    xs = standard_normal((cfg.samples, cfg.dim), cfg.seed, "partition/samples")
    lines = ["layer,channel,region_count,multi_point_count,max_intra_dist"]
    for layer, top, bottom, fused in fusion_stack_channels(cfg.layers):
        for channel, node in (("top", top), ("bottom", bottom), ("fusion", fused)):
            census = partition_census(net, node, xs)
            lines.append(
                f"{layer},{channel},{census.region_count},"
                f"{census.multi_point_count},{_fmt(census.max_intra_dist)}"
            )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class StabilityConfig:
    layers: int = 5
    dim: int = 20
    samples: int = 500
    seed: int = 7
    scaled: bool = False
    norm: str = "frobenius"

    def __post_init__(self):
        if self.layers < 1 or self.dim < 1 or self.samples < 0:
            raise ValueError("layers and dim must be positive, samples >= 0")
        if self.norm not in ("spectral", "frobenius"):
            raise ValueError(f"unknown norm {self.norm!r}")


def _sampled_pair_gains(
    net: DagNet, xs: np.ndarray, levels, seed: int
) -> Dict[int, float]:
    """Max gain over a fixed random subsample of unordered pairs."""
    n = xs.shape[0]
    raw = uniform((2 * PAIR_SUBSAMPLE,), seed, "gain/pairs")
    idx = np.minimum((raw * n).astype(np.int64), n - 1).reshape(-1, 2)
    idx = idx[idx[:, 0] != idx[:, 1]]
    trace = forward_batch(net, xs)
    lm = net.l_values()
    den = np.linalg.norm(xs[idx[:, 0]] - xs[idx[:, 1]], axis=1)
    keep = den > 0.0
    gains = {}
    for n_level in levels:
        stacked = np.concatenate(
            [trace.node_values[node] for node in lm.levels[n_level]], axis=1
        )
        num = np.linalg.norm(stacked[idx[:, 0]] - stacked[idx[:, 1]], axis=1)
        gains[n_level] = float(np.max(num[keep] / den[keep]))
    return gains


def run_stability_experiment(cfg: StabilityConfig) -> Tuple[str, str, dict]:
    """(gain CSV, level-sum CSV, report dict) for a fusion stack.

    With scaled=True the stack weights are rescaled to put every level sum
    at or below one before anything is measured.
    """
    net = build_fusion_stack(cfg.layers, cfg.dim, cfg.seed)
    if cfg.scaled:
        net = scale_to_stability(net, cfg.norm)
    report = stability_certificate(net, cfg.norm)

    lm = net.l_values()
    sums_spectral = stability_certificate(net, "spectral").sums
    sums_frobenius = stability_certificate(net, "frobenius").sums
    sum_lines = ["level,sum_spectral,sum_frobenius"]
    for n in range(1, lm.L + 1):
        sum_lines.append(f"{n},{_fmt(sums_spectral[n - 1])},{_fmt(sums_frobenius[n - 1])}")
    sums_csv = "\n".join(sum_lines) + "\n"

    gain_lines = ["layer,max_gain"]
    report_dict = report.to_dict()
    report_dict["scaled"] = cfg.scaled
    report_dict["layers"] = cfg.layers
    report_dict["samples"] = cfg.samples
    report_dict["pair_subsample"] = False
    if cfg.samples >= 2:
        xs = standard_normal((cfg.samples, cfg.dim), cfg.seed, "gain/samples")
        levels = [3 * j for j in range(1, cfg.layers + 1)]
        if cfg.samples <= PAIR_SAMPLE_LIMIT:
            gains = all_pairs_level_gains(net, xs, levels)
        else:
            gains = _sampled_pair_gains(net, xs, levels, cfg.seed)
            report_dict["pair_subsample"] = True
        for j in range(1, cfg.layers + 1):
            gain_lines.append(f"{j},{_fmt(gains[3 * j])}")
        report_dict["empirical_gain"] = gains[3 * cfg.layers]
        report_dict["layer_gains"] = [gains[3 * j] for j in range(1, cfg.layers + 1)]
    gain_csv = "\n".join(gain_lines) + "\n"
    return gain_csv, sums_csv, report_dict
