"""Built-in demonstration system.

A third-order plant with one algebraic constraint (rank E = 2), causal but
unstable open loop (spectral radius 2.5), scalar norm-bounded uncertainty
in the state matrix, two disturbance channels and one control input.
"""

import numpy as np

from .model import DescriptorPlant, UncertainPlant


def demo_plant():
    plant = DescriptorPlant(
        E=np.array([[1.0, 0.0, 0.0],
                    [0.0, 0.0, 0.0],
                    [2.0, 0.0, 1.0]]),
        A=np.array([[-0.25, 0.0, 0.0],
                    [-0.5, 0.5, 2.0],
                    [0.75, -1.0, -1.5]]),
        Bw=np.array([[0.0, 0.0],
                     [0.1, 0.0],
                     [0.2, 0.1]]),
        Bu=np.array([[0.0],
                     [0.0],
                     [1.0]]),
        C=np.array([[2.0, 2.0, 0.0]]),
        Dw=np.array([[0.01, -0.5]]),
    )
    return UncertainPlant.from_factors(
        plant,
        MA=np.array([[0.1], [-0.1], [0.05]]),
        NA=np.array([[0.0, 0.1, 0.1]]),
    )
