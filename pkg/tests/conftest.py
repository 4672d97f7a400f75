import numpy as np
from hypothesis import settings

settings.register_profile("labo", deadline=None, max_examples=50)
settings.load_profile("labo")


def interior_simplex(rng, num_classes: int, floor_mix: float = 0.05) -> np.ndarray:
    """Dirichlet(1) draw mixed toward uniform so no entry is near zero."""
    p = rng.dirichlet(np.ones(num_classes))
    return (1.0 - floor_mix) * p + floor_mix / num_classes
