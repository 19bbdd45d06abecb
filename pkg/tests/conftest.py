import numpy as np
import pytest

from descon import DescriptorPlant, UncertainPlant, check_admissibility, demo_plant

# reference data for the demo system: externally quoted state-feedback gains
REFERENCE_GAIN_1 = np.array([[0.2055, 1.0702, 1.4786]])
REFERENCE_GAIN_2 = np.array([[-0.4887, 1.8633, 4.4607]])


@pytest.fixture(scope="session")
def demo():
    return demo_plant()


def random_nonsingular(rng, n, cond=4.0):
    """Well-conditioned random matrix built from two orthogonal factors."""
    if n == 0:
        return np.zeros((0, 0))
    q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    sv = np.exp(rng.uniform(-0.5 * np.log(cond), 0.5 * np.log(cond), n))
    return q1 @ np.diag(sv) @ q2


def random_admissible_plant(rng, n=None, r=None, q=None, p=None, m=0,
                            rho_target=None):
    """Descriptor plant that is regular, causal and stable by construction:
    assembled in reduced coordinates, then hidden behind random transforms."""
    n = n if n is not None else int(rng.integers(2, 5))
    r = r if r is not None else int(rng.integers(1, n + 1))
    q = q if q is not None else int(rng.integers(1, 3))
    p = p if p is not None else int(rng.integers(1, 3))
    nr = n - r
    rho = rho_target if rho_target is not None else rng.uniform(0.3, 0.85)

    atil = rng.standard_normal((r, r))
    radius = max(np.abs(np.linalg.eigvals(atil)).max(), 1e-9)
    atil *= rho / radius
    a12 = 0.4 * rng.standard_normal((r, nr))
    a21 = 0.4 * rng.standard_normal((nr, r))
    a22 = random_nonsingular(rng, nr, cond=3.0)
    a11 = atil + (a12 @ np.linalg.solve(a22, a21) if nr else np.zeros((r, r)))
    ad = np.block([[a11, a12], [a21, a22]]) if nr else a11

    bwd = rng.standard_normal((n, q))
    bud = rng.standard_normal((n, m)) if m else np.zeros((n, 0))
    cd = rng.standard_normal((p, n))
    dd = 0.3 * rng.standard_normal((p, q))

    w_inv = random_nonsingular(rng, n)
    v_inv = random_nonsingular(rng, n)
    e_d = np.diag(np.concatenate([np.ones(r), np.zeros(nr)]))
    plant = DescriptorPlant(
        E=w_inv @ e_d @ v_inv,
        A=w_inv @ ad @ v_inv,
        Bw=w_inv @ bwd,
        Bu=w_inv @ bud,
        C=cd @ v_inv,
        Dw=dd,
    )
    assert check_admissibility(plant.E, plant.A).admissible
    return plant


def random_uncertain_plant(rng, scale=0.15, **kw):
    """Admissible plant with one control input and scalar state-matrix
    uncertainty, causally controllable by construction."""
    plant = random_admissible_plant(rng, m=1, **kw)
    n = plant.n
    return UncertainPlant.from_factors(
        plant,
        MA=scale * rng.standard_normal((n, 1)),
        NA=scale * rng.standard_normal((1, n)),
    )
