from .env import ExecEnv, ExecResult, canonical_hash, sample, seed_lanes, uniform_lanes
from .executor import HalfPrecisionError, execute, seed_inputs
