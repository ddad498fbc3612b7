"""Feedforward networks as DAGs with piecewise-linear analysis.

Build networks from atomic arc operations, evaluate them with frozen
activation patterns, probe the linear-region partition at any node, and
certify Lipschitz stability from per-level weight-norm sums.
"""

from . import errors
from .builders import (
    build_attention_toy,
    build_fusion,
    build_fusion_stack,
    build_lenet_shape,
    build_resnet_block,
    build_series,
    fusion_stack_channels,
)
from .engine import (
    RegionSignature,
    Trace,
    forward,
    forward_batch,
    level_output,
    region_affine,
    signature,
    signature_batch,
)
from .graph import (
    Arc,
    DagNet,
    GraphBuilder,
    LevelMap,
    add_arc,
    computable_subgraph,
    l_values,
    topological_order,
    validate,
)
from .lowering import lower_cpwl_to_relu, lower_maxpool2, lower_maxpool_n
from .ops import (
    MAXLU2,
    RELU,
    ArcOp,
    CpwlSpec,
    Transform,
    activation,
    activation_affine,
    activation_apply,
    affine,
    cpwl_eval,
    identity,
    linear,
    transform,
    transform_affine,
    transform_apply,
    uniform_bound,
    unrectify_diag,
)
from .partition import (
    PartitionCensus,
    fusion_partition_bound,
    partition_census,
    refinement_check,
)
from .serialize import load_graph, save_graph
from .stability import (
    StabilityReport,
    empirical_level_gains,
    empirical_max_gain,
    frobenius_norm,
    level_weight_sum,
    lipschitz_upper_bound,
    net_uniform_bound,
    resnet_stability_check,
    scale_to_stability,
    spectral_norm,
    stability_certificate,
)

__version__ = "0.1.0"
