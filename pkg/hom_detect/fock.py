"""Bosonic creation-operator algebra over sorted photon multisets.

A term key is a sorted tuple of mode labels, one entry per photon, and stands
for the normalised Fock ket ``prod(a_m^dagger) / sqrt(prod(n_m!)) |vac>``.
"""
import itertools
import math
from collections import Counter, defaultdict
from collections.abc import Callable, Hashable, Iterable
from typing import Any

from hom_detect.constants import AMPLITUDE_PRUNE_TOLERANCE

type FockKey = tuple[Any, ...]
type FockTerms = dict[FockKey, complex]
type ModeMap = Callable[[Any], Iterable[tuple[Hashable, complex]]]


def canonical(modes: Iterable[Any]) -> FockKey:
    return tuple(sorted(modes))


def occupation_factor(key: FockKey) -> float:
    return math.sqrt(math.prod(math.factorial(count) for count in Counter(key).values()))


def norm_squared(terms: FockTerms) -> float:
    return float(sum(abs(amplitude) ** 2 for amplitude in terms.values()))


def transform(
    terms: FockTerms,
    mode_map: ModeMap,
    prune: float = AMPLITUDE_PRUNE_TOLERANCE,
) -> FockTerms:
    """Substitute every creation operator by its image under ``mode_map``."""
    result: defaultdict[FockKey, complex] = defaultdict(complex)

    for key, amplitude in terms.items():
        scale = amplitude / occupation_factor(key)
        images = [list(mode_map(mode)) for mode in key]

        for choice in itertools.product(*images):
            coefficient = scale
            for _, factor in choice:
                coefficient *= factor

            if coefficient == 0:
                continue

            output = canonical(mode for mode, _ in choice)
            result[output] += coefficient * occupation_factor(output)

    return {
        key: amplitude
        for key, amplitude in result.items()
        if abs(amplitude) >= prune
    }
