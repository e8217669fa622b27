from .empirical import cdf, integrate_phi, moments, wasserstein1, wasserstein1_to_gaussian

__all__ = ["cdf", "integrate_phi", "moments", "wasserstein1", "wasserstein1_to_gaussian"]
