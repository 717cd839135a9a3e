from amisc.models.advection import (
    AdvectionDiffusionConfig,
    advection_cost,
    advection_diffusion_ensemble,
    kle_diffusivity,
)
from amisc.models.base import ModelEnsemble, single_model
from amisc.models.cosine import cosine_2d, cosine_ladder

__all__ = [
    "AdvectionDiffusionConfig",
    "ModelEnsemble",
    "advection_cost",
    "advection_diffusion_ensemble",
    "cosine_2d",
    "cosine_ladder",
    "kle_diffusivity",
    "single_model",
]
