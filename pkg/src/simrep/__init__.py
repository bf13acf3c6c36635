"""simrep: holistic comparison of simulation outputs.

Trains ensembles of contrastive encoders on Monte Carlo simulation outputs,
projects outputs to low-dimensional points, and uses the euclidean distance
between projections as a single comparison value, with a consensus score
quantifying how much independently trained ensemble members agree.
"""

from .contrastive import (
    AugmentationPolicy,
    EnsembleModel,
    TrainConfig,
    augment,
    default_policy,
    default_spec,
    euclid_similarity,
    normalize_fit,
    ntxent_euclidean,
    train_ensemble,
    train_member,
)
from .embedding import (
    ConsensusReport,
    DistanceSummary,
    consensus_ensemble,
    consensus_pair,
    distance,
    knn,
    project,
    project_dataset,
    replicate_distance,
)
from .nn import EncoderSpec, EncoderWeights, grad_check
from .simulators import (
    ABMParams,
    FluxNetwork,
    LVParams,
    ParamRanges,
    SimulationOutput,
    abm_simulate,
    fba_knockout,
    fba_solve,
    gen_testdata,
    load_toy_network,
    lv_simulate,
    monte_carlo,
)

__version__ = "0.1.0"
