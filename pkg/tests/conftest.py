import numpy as np
import pytest

from smm import kernels


@pytest.fixture(params=kernels.available_backends())
def kernel_backend(request):
    """Run a test under every built kernel backend."""
    previous = kernels.active_backend()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)


def assert_mean_within(samples, true_mean, true_var, n_se=5.0):
    """Two-sided Monte Carlo mean test at n_se standard errors."""
    samples = np.asarray(samples, dtype=float)
    se = np.sqrt(np.asarray(true_var, dtype=float) / samples.shape[0])
    err = np.abs(samples.mean(axis=0) - true_mean)
    assert np.all(err <= n_se * se + 1e-300), \
        f"mean off by {err} (allowed {n_se * se})"


def assert_var_within(samples, true_var, n_se=5.0):
    """Monte Carlo variance test; the SE of the sample variance uses the
    empirical fourth moment, which is consistent without analytic kurtosis."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    s2 = samples.var(axis=0, ddof=1)
    centered = samples - samples.mean(axis=0)
    m4 = np.mean(centered ** 4, axis=0)
    se = np.sqrt(np.maximum(m4 - (n - 3) / (n - 1) * s2 ** 2, 0.0) / n)
    err = np.abs(s2 - true_var)
    assert np.all(err <= n_se * se + 1e-300), \
        f"variance off by {err} (allowed {n_se * se})"
