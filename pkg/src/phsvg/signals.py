"""Two-channel test signals: disturbances and injected input errors.

A SignalSpec is a small immutable description; sample() evaluates it at a
time instant.  The bounded-noise kind draws from a counter-based generator
keyed by (seed, time bits), so a sample depends only on the spec and the
query time - re-running a simulation reproduces it bit for bit, and samples
at different times can be evaluated in any order or concurrently.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SignalSpec",
    "zero_signal",
    "sinusoid",
    "constant",
    "bounded_noise",
    "sample",
    "sup_norm",
    "SIGNAL_KINDS",
]

SIGNAL_KINDS = ("zero", "sinusoid", "constant", "bounded_noise")


@dataclass(frozen=True)
class SignalSpec:
    kind: str = "zero"
    frequency: float = 0.0
    phase: float = 0.0
    amplitude: float = 0.0
    value: tuple[float, float] = (0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if not np.isfinite(self.frequency):
            raise ValueError("frequency must be finite")
        if not (np.isfinite(self.amplitude) and self.amplitude >= 0):
            raise ValueError("amplitude must be nonnegative and finite")
        if not all(np.isfinite(v) for v in self.value):
            raise ValueError("constant value must be finite")


def zero_signal() -> SignalSpec:
    return SignalSpec(kind="zero")


def sinusoid(frequency: float, amplitude: float = 1.0, phase: float = 0.0) -> SignalSpec:
    """amplitude * (cos(w t + phase), sin(w t + phase))."""
    return SignalSpec(kind="sinusoid", frequency=frequency,
                      amplitude=amplitude, phase=phase)


def constant(v1: float, v2: float) -> SignalSpec:
    return SignalSpec(kind="constant", value=(float(v1), float(v2)))


def bounded_noise(amplitude: float, seed: int = 0) -> SignalSpec:
    """Deterministic noise with ||v(t)|| <= amplitude at every sample."""
    return SignalSpec(kind="bounded_noise", amplitude=amplitude, seed=int(seed))


def _noise_sample(spec: SignalSpec, t: float) -> np.ndarray:
    # Philox keyed by the seed with the time's bit pattern as counter:
    # platform-independent and free of call-order state.
    tbits = np.float64(t).view(np.uint64)
    bits = np.random.Philox(counter=[int(tbits), 0, 0, 0],
                            key=[spec.seed & 0xFFFFFFFFFFFFFFFF, 0])
    u_mag, u_ang = np.random.Generator(bits).random(2)
    mag = min(spec.amplitude * u_mag, spec.amplitude)
    ang = 2.0 * math.pi * u_ang
    return np.array([mag * math.cos(ang), mag * math.sin(ang)])


def sample(spec: SignalSpec, t: float) -> np.ndarray:
    """Evaluate the signal at time t (a 2-vector)."""
    if not np.isfinite(t):
        raise ValueError("sample time must be finite")
    if spec.kind == "zero":
        return np.zeros(2)
    if spec.kind == "constant":
        return np.array(spec.value, dtype=float)
    if spec.kind == "sinusoid":
        arg = spec.frequency * t + spec.phase
        return spec.amplitude * np.array([math.cos(arg), math.sin(arg)])
    return _noise_sample(spec, t)


def sup_norm(spec: SignalSpec) -> float:
    """Supremum of ||signal(t)|| over all times."""
    if spec.kind == "zero":
        return 0.0
    if spec.kind == "constant":
        return float(math.hypot(*spec.value))
    return float(spec.amplitude)
