"""Training configuration for the boosted-tree learner."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import product

from ..errors import ConfigError


@dataclass(frozen=True)
class TrainConfig:
    rounds: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    l2_leaf: float = 1.0
    min_child_cover: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 0:
            raise ConfigError(f"rounds must be >= 0, got {self.rounds}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError(f"learning_rate must lie in (0,1], got {self.learning_rate}")
        if self.l2_leaf < 0.0:
            raise ConfigError(f"l2_leaf must be >= 0, got {self.l2_leaf}")
        if self.min_child_cover < 0.0:
            raise ConfigError(f"min_child_cover must be >= 0, got {self.min_child_cover}")

    def as_dict(self) -> dict:
        return asdict(self)


def default_grid(seed: int = 0) -> list[TrainConfig]:
    """The CLI's stock hyperparameter grid."""
    grid = []
    for depth, rounds, lr in product((2, 3, 4), (50, 100, 200), (0.05, 0.1, 0.3)):
        grid.append(
            TrainConfig(
                rounds=rounds,
                max_depth=depth,
                learning_rate=lr,
                l2_leaf=1.0,
                seed=seed,
            )
        )
    return grid
