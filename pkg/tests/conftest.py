import pytest

from dtameta.data import Study2x2, load_cd64
from dtameta.model import ModelParams
from dtameta.quadrature import gauss_hermite


@pytest.fixture(scope="session")
def cd64():
    return load_cd64()


@pytest.fixture(scope="session")
def rule21():
    return gauss_hermite(21)


@pytest.fixture(scope="session")
def mid_params():
    """Interior parameter point used by numeric spot checks."""
    return ModelParams(theta=0.4, alpha=2.0, beta=0.2, sigma_theta=0.6, sigma_alpha=1.0)


@pytest.fixture(scope="session")
def small_studies():
    """Six hand-made studies, no zero cells, moderate sizes."""
    rows = [
        (18, 4, 5, 40),
        (25, 6, 4, 52),
        (12, 3, 6, 33),
        (30, 8, 7, 61),
        (22, 2, 9, 47),
        (16, 5, 3, 38),
    ]
    return [
        Study2x2(n11=tp, n10=fp, n01=fn, n00=tn, label=f"s{i}")
        for i, (tp, fp, fn, tn) in enumerate(rows)
    ]
