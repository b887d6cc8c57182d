"""C^4 smoothstep polynomial shared by the transition layer and the cutoff."""

import numpy as np


def smoothstep(u, nu=0):
    """Degree-9 smoothstep on [0, 1] and its first two derivatives.

    Outside [0, 1] the function is extended by its constant end values, so
    derivatives vanish there.
    """
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    if nu == 0:
        return u**5 * (126.0 + u * (-420.0 + u * (540.0 + u * (-315.0 + 70.0 * u))))
    if nu == 1:
        return 630.0 * (u * (1.0 - u)) ** 4
    if nu == 2:
        return 2520.0 * (u * (1.0 - u)) ** 3 * (1.0 - 2.0 * u)
    raise ValueError("only derivatives up to order 2 are available")
