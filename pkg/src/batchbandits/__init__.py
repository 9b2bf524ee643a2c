"""Batched stochastic, linear and adversarial bandits with a regret harness."""
from .design import (
    Design,
    LeastSquaresEstimate,
    PullMultiset,
    epsilon_net,
    frank_wolfe_goptimal,
    least_squares,
    max_leverage,
    project_to_span,
    round_design,
)
from .env import (
    AdversarialRewardTable,
    BatchSchedule,
    LinearBanditInstance,
    StochasticMabInstance,
    gaps,
    linear_reward,
    make_batch_random_adversary,
    make_iid_adversary,
    make_switching_adversary,
    sample_stochastic_reward,
)
from .exceptions import (
    DegenerateInstanceError,
    ProtocolError,
    RankError,
    UnsupportedInstanceError,
    ValidationError,
)
from .harness import RunConfig, RunSummary, export, run_experiment, run_sweep
from .policy_adversarial import (
    Exp3DelayedState,
    exp3_delayed_update,
    exp3_sample,
    make_uniform_schedule,
    run_batched_adversarial,
)
from .policy_linear import eliminate_linear, plan_linear_batch, run_batched_linear, run_infinite_linear
from .policy_mab import MabEliminationState, plan_mab_batch, run_batched_mab, ucb_baseline, update_mab
from .regret import (
    RegretTrace,
    compute_adversarial_regret,
    compute_pseudo_regret,
    theoretical_bound_mab,
)
from .rng import make_rng

__version__ = "0.1.0"
