"""A generator on Box[0,1]^2 that is Legendre and continuous on the closed
box but identically zero on the face ``x1 = 0``.

``h(x) = phi(x1) + x1 * phi(x2)`` with ``phi(t) = t log t + (1 - t) log(1 - t)``.
Its Hessian determinant is ``1 / ((1 - x1) x2 (1 - x2)) - logit(x2)**2 > 0``
on the open box, so ``h`` is strictly convex there.
"""

import numpy as np
from scipy.special import logit, xlogy

from bregman_lab.domains import Box
from bregman_lab.generators import Generator


def _phi(t):
    t = np.clip(t, 0.0, 1.0)
    return xlogy(t, t) + xlogy(1.0 - t, 1.0 - t)


class FaceAffine(Generator):
    name = "face_affine"
    strictly_convex_on_closure = False

    def __init__(self, domain=None):
        super().__init__(domain if domain is not None else Box(0.0, 1.0, dim=2))

    def _value(self, x):
        return float(_phi(x[0]) + x[0] * _phi(x[1]))

    def _gradient(self, x):
        return np.array([logit(x[0]) + _phi(x[1]), x[0] * logit(x[1])])

    def _hessian(self, x):
        off = logit(x[1])
        return np.array([[1.0 / (x[0] * (1.0 - x[0])), off],
                         [off, x[0] / (x[1] * (1.0 - x[1]))]])
