"""Named configuration documents for the command line."""
import copy
import math
from typing import Any

from hom_detect.errors import UnknownPresetError

_H = 1 / math.sqrt(2)

BELL_STATE: dict[str, Any] = {
    'dims': [2, 2],
    'amplitudes': [[_H, 0.0], [0.0, 0.0], [0.0, 0.0], [_H, 0.0]],
}

PRODUCT_STATE: dict[str, Any] = {
    'dims': [2, 2],
    'amplitudes': [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
}

MAXIMALLY_MIXED_STATE: dict[str, Any] = {
    'dims': [2, 2],
    'matrix': [
        [[0.25 if row == column else 0.0, 0.0] for column in range(4)]
        for row in range(4)
    ],
}

SIMULATION_COPIES = 1_000_000
SIMULATION_SEED = 2024

PRESETS: dict[str, dict[str, dict[str, Any]]] = {
    'bell-witness': {
        'witness': {**BELL_STATE, 'decompose': True},
        'exact': {'rho': BELL_STATE, 'witness': BELL_STATE, 'find_decomposition': True},
        'simulate': {
            'n_copies': SIMULATION_COPIES,
            'seed': SIMULATION_SEED,
            'rho': BELL_STATE,
            'witness': BELL_STATE,
        },
    },
    'maximally-mixed': {
        'exact': {'rho': MAXIMALLY_MIXED_STATE, 'witness': BELL_STATE},
        'simulate': {
            'n_copies': SIMULATION_COPIES,
            'seed': SIMULATION_SEED,
            'rho': MAXIMALLY_MIXED_STATE,
            'witness': BELL_STATE,
        },
    },
    'product-boundary': {
        'exact': {'rho': PRODUCT_STATE, 'witness': BELL_STATE, 'find_decomposition': True},
        'simulate': {
            'n_copies': SIMULATION_COPIES,
            'seed': SIMULATION_SEED,
            'rho': PRODUCT_STATE,
            'witness': BELL_STATE,
        },
    },
    'quantum-join-fig4': {
        'circuit-verify': {
            'x': [[0.5, 0.0], [0.0, 0.5], [-0.5, 0.0], [0.0, -0.5]],
            'q': 1,
            'circuit': 'quantum-join-fig4',
        },
    },
}


def preset_document(name: str, command: str) -> dict[str, Any]:
    commands = PRESETS.get(name, {})
    if command not in commands:
        raise UnknownPresetError(name, command)
    return copy.deepcopy(commands[command])
