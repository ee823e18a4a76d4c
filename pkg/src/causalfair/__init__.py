"""Fair synthetic tabular data from a causal graph, with debiasing at generation time."""

from causalfair.generator import GeneratorModel, generate, generate_node, load, save
from causalfair.graph import (
    CausalDag, Definition, EdgeRemovalSet, FairnessSpec, d_separated, edges_to_remove, markov_boundary,
    perturb_dag, topological_order,
)
from causalfair.kernels import BACKEND
from causalfair.metrics import (
    EvalReport, auroc, dp_metric, ftu_metric, precision_recall, train_downstream,
)
from causalfair.pipeline import (
    ExperimentConfig, ingest, run_ablation, run_baseline_pr, run_experiment, run_hidden_confounder, sweep_bias,
)
from causalfair.sem import SemSpec, inject_direct_bias, interventional_sample, sample
from causalfair.surrogate import FixedValue, MarginalSample, SurrogatePolicy
from causalfair.table import BINARY, CONTINUOUS, Column, SchemaError, Table
from causalfair.training import TrainConfig, fit

__version__ = "0.1.0"
