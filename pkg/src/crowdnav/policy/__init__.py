from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint, validate_params
from .controller import (
    Controller,
    LearnedController,
    OrcaController,
    SocialForceController,
    StraightController,
    make_controller,
)
from .network import (
    ARCHS,
    HiddenState,
    PolicyOutput,
    SequenceInputs,
    SequenceResult,
    StepInputs,
    backward_sequence,
    forward_sequence,
    forward_step,
)
from .params import count_params, init_params, param_shapes

__all__ = [
    "ARCHS",
    "CheckpointError",
    "Controller",
    "HiddenState",
    "LearnedController",
    "OrcaController",
    "PolicyOutput",
    "SequenceInputs",
    "SequenceResult",
    "SocialForceController",
    "StepInputs",
    "StraightController",
    "backward_sequence",
    "count_params",
    "forward_sequence",
    "forward_step",
    "init_params",
    "load_checkpoint",
    "make_controller",
    "param_shapes",
    "save_checkpoint",
    "validate_params",
]
