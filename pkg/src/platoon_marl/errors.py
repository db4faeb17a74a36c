"""Exception types shared across the package."""


class PlatoonMarlError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PlatoonMarlError):
    """Invalid configuration value, unknown key, or violated invariant."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PlacementError(PlatoonMarlError):
    """Vehicle drop could not place all platoons without overlap."""


class EpisodeStateError(PlatoonMarlError):
    """An episode-state operation was called at the wrong time."""


class CheckpointError(PlatoonMarlError):
    """Model checkpoint is missing, malformed, or dimensionally incompatible."""


class TrainingDivergedError(PlatoonMarlError):
    """A network parameter or loss became non-finite during training."""

    def __init__(self, seed: int, episode: int, agent_id: str):
        self.seed = seed
        self.episode = episode
        self.agent_id = agent_id
        super().__init__(
            f"non-finite parameter detected (seed={seed}, episode={episode}, agent={agent_id})"
        )
