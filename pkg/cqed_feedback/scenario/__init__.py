from .config import (ScenarioConfig, DirectRates, NoiseRates, ConfigError, parse_config, emit_config, from_flat,
                     to_flat, apply_overrides, env_overrides, read_flat, SCHEMA)
from .presets import preset, preset_flat, PRESETS
