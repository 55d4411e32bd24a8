"""Scalar memory kernels with exact Laplace transforms.

A kernel is a finite sum of terms c * t^m * exp(sigma*t) * cos(omega*t) (or sin
in place of cos).  This family is closed under antidifferentiation and under
the Laplace transform, so a_hat(lambda) and the integrated kernel
1 + int_0^t a(s) ds are both available in closed form.  Decay (sigma < 0) is
required for every contributing term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Kernel", "KernelTerm", "KernelPoleError"]


class KernelPoleError(ValueError):
    """Laplace-transform argument coincides with a kernel pole."""


@dataclass(frozen=True)
class KernelTerm:
    """One term c * t^power * exp(rate*t) * cos(freq*t), or sin for phase="sin"."""

    coeff: float
    power: int = 0
    rate: float = -1.0
    freq: float = 0.0
    phase: str = "cos"

    def __post_init__(self):
        if int(self.power) != self.power or self.power < 0:
            raise ValueError("power must be a nonnegative integer")
        if self.freq < 0:
            raise ValueError("freq must be nonnegative")
        if self.phase not in ("cos", "sin"):
            raise ValueError(f"phase must be 'cos' or 'sin', got {self.phase!r}")
        if self.coeff != 0.0:
            if self.rate >= 0.0:
                raise ValueError("a contributing term needs rate < 0 (integrable decay)")
            if self.freq == 0.0 and self.phase == "sin":
                raise ValueError("freq=0 sine term is identically zero; use the cos form")


def _poly_exp_antideriv(m: int, z: complex, t):
    """Evaluate int_0^t s^m e^{z s} ds (z != 0) by repeated integration by parts."""
    p_t = np.zeros(np.shape(t), dtype=complex)
    fact = 1.0
    for j in range(m + 1):
        p_t = p_t + ((-1.0) ** j) * fact * np.power(t, m - j) / z ** (j + 1)
        fact *= m - j
    p_0 = ((-1.0) ** m) * math.factorial(m) / z ** (m + 1)
    return np.exp(z * np.asarray(t)) * p_t - p_0


@dataclass(frozen=True)
class Kernel:
    """Finite exponential-polynomial-trigonometric kernel; empty terms = zero kernel."""

    terms: tuple = ()

    def __post_init__(self):
        terms = tuple(self.terms)
        for term in terms:
            if not isinstance(term, KernelTerm):
                raise TypeError("Kernel terms must be KernelTerm instances")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def zero(cls) -> "Kernel":
        return cls(())

    @property
    def is_zero(self) -> bool:
        return all(t.coeff == 0.0 for t in self.terms)

    @property
    def poles(self) -> tuple:
        """Poles of the Laplace transform: rate +/- i*freq per contributing term."""
        seen = []
        for term in self.terms:
            if term.coeff == 0.0:
                continue
            cands = [complex(term.rate, term.freq)]
            if term.freq > 0:
                cands.append(complex(term.rate, -term.freq))
            for p in cands:
                if p not in seen:
                    seen.append(p)
        return tuple(seen)

    def eval(self, t):
        """Pointwise value a(t) for t >= 0 (scalar or array)."""
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        if ts.size and ts.min() < 0:
            raise ValueError("kernel is defined for t >= 0 only")
        out = np.zeros(ts.shape)
        for term in self.terms:
            if term.coeff == 0.0:
                continue
            osc = np.cos(term.freq * ts) if term.phase == "cos" else np.sin(term.freq * ts)
            out += term.coeff * np.power(ts, term.power) * np.exp(term.rate * ts) * osc
        return float(out[0]) if scalar else out

    __call__ = eval

    def _check_poles(self, lams):
        for p in self.poles:
            if np.any(np.abs(lams - p) <= 1e-12 * (1.0 + abs(p))):
                raise KernelPoleError(f"lambda coincides with kernel pole {p}")

    def laplace(self, lam):
        """Closed-form a_hat(lambda); analytic off the pole set.

        For Re(lambda) > max rate this equals int_0^inf e^{-lambda t} a(t) dt;
        elsewhere it is the analytic continuation.
        """
        scalar = np.ndim(lam) == 0
        lams = np.atleast_1d(np.asarray(lam, dtype=complex))
        self._check_poles(lams)
        out = np.zeros(lams.shape, dtype=complex)
        for term in self.terms:
            if term.coeff == 0.0:
                continue
            fact = math.factorial(term.power)
            zp = complex(term.rate, term.freq)
            zm = complex(term.rate, -term.freq)
            bp = (lams - zp) ** (-(term.power + 1))
            bm = (lams - zm) ** (-(term.power + 1))
            if term.phase == "cos":
                out += term.coeff * fact * 0.5 * (bp + bm)
            else:
                out += term.coeff * fact * (bp - bm) / 2j
        return complex(out[0]) if scalar else out

    def integrated(self, t):
        """The integrated kernel 1 + int_0^t a(s) ds; equals 1 at t = 0."""
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        if ts.size and ts.min() < 0:
            raise ValueError("integrated kernel is defined for t >= 0 only")
        out = np.ones(ts.shape)
        for term in self.terms:
            if term.coeff == 0.0:
                continue
            z = complex(term.rate, term.freq)
            if z == 0:
                g = np.power(ts, term.power + 1) / (term.power + 1) + 0j
            else:
                g = _poly_exp_antideriv(term.power, z, ts)
            out += term.coeff * (g.real if term.phase == "cos" else g.imag)
        return float(out[0]) if scalar else out

    def laplace_numeric(self, lam, horizon: float, step: float) -> complex:
        """Trapezoidal approximation of int_0^T e^{-lambda t} a(t) dt.

        Cross-check for laplace(); sensible only for Re(lambda) > max rate.
        """
        if horizon <= 0 or step <= 0:
            raise ValueError("horizon and step must be positive")
        n = int(round(horizon / step))
        ts = step * np.arange(n + 1)
        vals = np.exp(-complex(lam) * ts) * self.eval(ts)
        return complex(step * (vals.sum() - 0.5 * (vals[0] + vals[-1])))

    @classmethod
    def from_json(cls, obj, where: str = "kernel") -> "Kernel":
        """Parse [{"c","m","sigma","omega","phase"}, ...]; omega/phase optional."""
        if not isinstance(obj, list):
            raise ValueError(f"{where}: expected a list of kernel terms")
        terms = []
        for i, entry in enumerate(obj):
            if not isinstance(entry, dict):
                raise ValueError(f"{where}[{i}]: expected an object")
            try:
                terms.append(
                    KernelTerm(
                        coeff=float(entry["c"]),
                        power=int(entry["m"]),
                        rate=float(entry["sigma"]),
                        freq=float(entry.get("omega", 0.0)),
                        phase=str(entry.get("phase", "cos")),
                    )
                )
            except KeyError as exc:
                raise ValueError(f"{where}[{i}]: missing key {exc.args[0]!r}") from None
            except ValueError as exc:
                raise ValueError(f"{where}[{i}]: {exc}") from None
        return cls(tuple(terms))
