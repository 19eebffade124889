"""Deviation bounds used by the certificates.

Holds the known constants (Lipschitz constant of the system map ``lip_f``,
Lipschitz constant of the inverse model ``lip_c``, RKHS-norm bound
``rkhs_bound``) and derives the class-K functions:

* ``interp_err(eps)``  -- bound on the inverse-model estimation error at
  distance ``eps`` from the training features.  Default ("profile" mode):
  ``rkhs_bound * sqrt(1 - kbar(eps)/kbar(0))`` from the kernel profile.
  An explicit closed form or a linear slope can be configured instead.
* ``input_dev(eps)  = lip_c * eps + interp_err(eps)``
* ``output_dev(eps) = lip_f * (eps + input_dev(eps))``   (delay 1 only)
* ``state_dev(eps)``:  ``input_dev + output_dev + eps`` for delay 1,
  ``input_dev + (1 + lip_f) * eps`` for delay 2, or a configured linear
  slope overriding both.
* ``state_dev_inv(r)`` -- the inverse of ``state_dev``, exact division in
  linear mode, monotone bisection otherwise (relative tolerance 1e-10).

The profile-mode ``interp_err`` is one concrete choice of class-K error
bound; tighter bounds exist for specific kernels.  For anisotropic kernels
pass the profile evaluated at the most conservative (smallest) length scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = ["DeviationBounds"]

_INV_REL_TOL = 1e-10
_MAX_DOUBLINGS = 10**6
_BISECT_ITERS = 200


@dataclass(frozen=True)
class DeviationBounds:
    """Immutable bound set; all evaluations are pure.

    ``eta_mode``: "profile" (needs ``profile``), "explicit" (needs
    ``explicit_eta``), or "linear" (needs ``eta_slope``).
    ``gamma_mode``: "composed" or "linear" (needs ``gamma_slope``).
    """

    lip_f: float
    lip_c: float
    rkhs_bound: float
    delay: int = 1
    eta_mode: str = "profile"
    profile: Optional[Callable] = None          # scalar kernel profile kbar(r)
    profile_deficit: Optional[Callable] = None  # stable kbar(0) - kbar(r)
    explicit_eta: Optional[Callable] = None
    eta_slope: float = 0.0
    gamma_mode: str = "composed"
    gamma_slope: float = 0.0

    def __post_init__(self):
        if self.lip_f <= 0 or self.lip_c <= 0:
            raise ValueError("Lipschitz constants must be positive")
        if self.rkhs_bound < 0:
            raise ValueError("rkhs_bound must be >= 0")
        if self.delay not in (1, 2):
            raise ValueError("delay must be 1 or 2")
        if self.eta_mode not in ("profile", "explicit", "linear"):
            raise ValueError(f"unknown eta_mode {self.eta_mode!r}")
        if self.gamma_mode not in ("composed", "linear"):
            raise ValueError(f"unknown gamma_mode {self.gamma_mode!r}")
        if self.eta_mode == "profile" and self.profile is None:
            raise ValueError("profile mode needs a kernel profile")
        if self.eta_mode == "explicit" and self.explicit_eta is None:
            raise ValueError("explicit mode needs the closed form")
        if self.eta_mode == "linear" and self.eta_slope <= 0:
            raise ValueError("linear eta mode needs a positive slope")
        if self.gamma_mode == "linear" and self.gamma_slope <= 0:
            raise ValueError("linear gamma mode needs a positive slope")

    @staticmethod
    def _check_eps(eps):
        eps = np.asarray(eps, dtype=float)
        if np.any(eps < 0):
            raise ValueError("eps must be >= 0")
        return eps

    def interp_err(self, eps):
        """Class-K bound on |c(x) - chat(x)| given distance-to-data eps."""
        eps = self._check_eps(eps)
        if self.eta_mode == "explicit":
            out = np.asarray(self.explicit_eta(eps), dtype=float)
        elif self.eta_mode == "linear":
            out = self.eta_slope * eps
        else:
            k0 = float(self.profile(0.0))
            if self.profile_deficit is not None:
                deficit = np.asarray(self.profile_deficit(eps), dtype=float)
            else:
                deficit = k0 - np.asarray(self.profile(eps), dtype=float)
            out = self.rkhs_bound * np.sqrt(np.maximum(0.0, deficit / k0))
        return float(out) if out.ndim == 0 else out

    def input_dev(self, eps):
        """Bound on the gap between a stored control and the estimate
        evaluated at a state eps away from the stored one."""
        eps = self._check_eps(eps)
        out = self.lip_c * eps + self.interp_err(eps)
        return float(out) if np.ndim(out) == 0 else out

    def output_dev(self, eps):
        """Bound on the resulting next-output gap (delay 1 only)."""
        if self.delay != 1:
            raise ValueError("output_dev is defined for delay 1 only")
        eps = self._check_eps(eps)
        out = self.lip_f * (eps + self.input_dev(eps))
        return float(out) if np.ndim(out) == 0 else out

    def state_dev(self, eps):
        """Bound on the successor-state gap; drives the certificates."""
        eps = self._check_eps(eps)
        if self.gamma_mode == "linear":
            out = self.gamma_slope * eps
        elif self.delay == 1:
            out = self.input_dev(eps) + self.output_dev(eps) + eps
        else:
            out = self.input_dev(eps) + (1.0 + self.lip_f) * eps
        return float(out) if np.ndim(out) == 0 else out

    def state_dev_inv(self, r):
        """eps with |state_dev(eps) - r| <= 1e-10 * max(1, r).

        Linear mode divides exactly.  Otherwise brackets by doubling and
        bisects; a bracket that fails to grow past the target signals a
        non-class-K-infinity configuration and raises.
        """
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("radius must be >= 0")
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        if self.gamma_mode == "linear":
            out = r / self.gamma_slope
            return float(out[0]) if scalar else out
        out = np.zeros_like(r)
        pos = r > 0
        if pos.any():
            rp = r[pos]
            hi = np.ones_like(rp)
            for _ in range(_MAX_DOUBLINGS):
                bad = self.state_dev(hi) < rp
                if not bad.any():
                    break
                hi[bad] *= 2.0
                if np.any(np.isinf(hi)):
                    raise ValueError(
                        "state_dev does not reach the requested radius; "
                        "bounds are not class K-infinity")
            else:
                raise ValueError("bracket growth exceeded the doubling budget")
            lo = np.zeros_like(rp)
            mid = 0.5 * (lo + hi)
            for _ in range(_BISECT_ITERS):
                le = self.state_dev(mid) <= rp
                lo = np.where(le, mid, lo)
                hi = np.where(le, hi, mid)
                mid = 0.5 * (lo + hi)
                if np.all(np.abs(self.state_dev(mid) - rp)
                          <= 0.1 * _INV_REL_TOL * np.maximum(1.0, rp)):
                    break
            out[pos] = mid
        return float(out[0]) if scalar else out
