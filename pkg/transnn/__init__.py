"""TransNN Toolkit

This package simulates, analyzes and certifies transmission neural networks:
binary neurons whose excitatory and inhibitory links fire stochastically.
"""

__version__ = "1.0.0"
__author__ = "TransNN Toolkit"

from . import (
    error_handler,
    network_model,
    builders,
    binary_dynamics,
    markov_oracle,
    mean_field,
    limit_model,
    certificates,
    boolean_compiler,
    reporter,
    cli
)

__all__ = [
    'error_handler',
    'network_model',
    'builders',
    'binary_dynamics',
    'markov_oracle',
    'mean_field',
    'limit_model',
    'certificates',
    'boolean_compiler',
    'reporter',
    'cli',
]
