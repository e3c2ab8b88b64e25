from chatternet.model.config import ModelConfig, Prediction, InfluenceState, VARIANTS
from chatternet.model.network import ChatterNet, build_model
from chatternet.model.checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    "ModelConfig",
    "Prediction",
    "InfluenceState",
    "VARIANTS",
    "ChatterNet",
    "build_model",
    "save_checkpoint",
    "load_checkpoint",
]
