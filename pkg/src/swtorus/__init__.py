"""Small-world torus interconnection networks: generation, greedy local
navigation with fault awareness, resilience metrics, and cascading failures."""

__version__ = "0.1.0"

from .topology import (  # noqa: F401
    IbtParams,
    LatticeConfig,
    Network,
    StochasticParams,
    build_torus,
    generate_ibt,
    generate_stochastic,
    generate_stochastic_fixed_degree,
    load_network,
    save_network,
    torus_distance,
    unit_wiring_cost,
)
