"""Synthetic iris codes standing in for real capture hardware.

Codes and masks are 2048-bit strings held as Python ints (bit i of the int is
bit i of the code). Matching uses the masked normalized Hamming distance with
the classical 0.32 decision threshold.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

CODE_BITS = 2048
CODE_BYTES = CODE_BITS // 8
MATCH_THRESHOLD = 0.32
DEFAULT_NOISE = 0.05
FULL_MASK = (1 << CODE_BITS) - 1


@dataclass(frozen=True)
class IrisTemplate:
    code: int
    mask: int = FULL_MASK

    def __post_init__(self):
        if not 0 <= self.code <= FULL_MASK or not 0 <= self.mask <= FULL_MASK:
            raise ValueError("iris code and mask must fit in 2048 bits")
        if self.mask.bit_count() < CODE_BITS // 2:
            raise ValueError("mask must cover at least half of the code")

    def to_bytes(self) -> bytes:
        return self.code.to_bytes(CODE_BYTES, "big") + self.mask.to_bytes(CODE_BYTES, "big")

    @classmethod
    def from_bytes(cls, data: bytes):
        if len(data) != 2 * CODE_BYTES:
            raise ValueError(f"iris encoding must be {2 * CODE_BYTES} bytes")
        return cls(int.from_bytes(data[:CODE_BYTES], "big"), int.from_bytes(data[CODE_BYTES:], "big"))


class IrisFeature(IrisTemplate):
    """A fresh sample; same layout as a template."""


def enroll(seed: int | bytes | str) -> IrisTemplate:
    rng = random.Random(seed)
    return IrisTemplate(rng.getrandbits(CODE_BITS), FULL_MASK)


# Simulated capture latency in seconds, applied by ``sample``. Real sensors take
# roughly half a second; the stub is instant unless this is raised.
capture_delay = 0.0


def sample(
    template: IrisTemplate,
    noise_rate: float = DEFAULT_NOISE,
    rng: random.Random | None = None,
    delay: float | None = None,
) -> IrisFeature:
    if not 0.0 <= noise_rate <= 1.0:
        raise ValueError("noise_rate must lie in [0, 1]")
    delay = capture_delay if delay is None else delay
    if delay > 0:
        time.sleep(delay)
    rng = rng or random.Random()
    if noise_rate == 0.0:
        flips = 0
    elif noise_rate == 1.0:
        flips = FULL_MASK
    else:
        flips = 0
        for i in range(CODE_BITS):
            if rng.random() < noise_rate:
                flips |= 1 << i
    return IrisFeature(template.code ^ flips, template.mask)


def hamming_distance(a: IrisTemplate, b: IrisTemplate) -> float:
    valid = a.mask & b.mask
    n = valid.bit_count()
    if n == 0:
        return 1.0
    return ((a.code ^ b.code) & valid).bit_count() / n


def match(feature: IrisTemplate, template: IrisTemplate, threshold: float = MATCH_THRESHOLD) -> bool:
    return hamming_distance(feature, template) <= threshold


def embed(feature: IrisTemplate, challenge: bytes) -> bytes:
    """Physical-identity message: feature code || mask || challenge."""
    return feature.to_bytes() + bytes(challenge)


def split(message: bytes, challenge_len: int = 32) -> tuple[IrisFeature, bytes]:
    if len(message) != 2 * CODE_BYTES + challenge_len:
        raise ValueError("physical-identity message has wrong length")
    f = IrisFeature.from_bytes(message[: 2 * CODE_BYTES])
    return f, message[2 * CODE_BYTES :]
