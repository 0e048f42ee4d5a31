from dlma.harness.config import (
    DQN_FAIR,
    DQN_SUM,
    MODES,
    MULTI_INDEPENDENT,
    TABULAR_RL,
    ConfigError,
    ScenarioConfig,
    format_config,
    load_config,
    parse_config,
    with_overrides,
)
from dlma.harness.output import emit_csv, emit_svg, plot_csv, read_run_csv, read_sweep_csv
from dlma.harness.runner import (
    MetricsRecord,
    SweepRow,
    cumulative_throughput,
    oracle_for,
    run,
    short_term_throughput,
    sweep,
)

__all__ = [
    "ConfigError",
    "DQN_FAIR",
    "DQN_SUM",
    "MODES",
    "MULTI_INDEPENDENT",
    "MetricsRecord",
    "ScenarioConfig",
    "SweepRow",
    "TABULAR_RL",
    "cumulative_throughput",
    "emit_csv",
    "emit_svg",
    "format_config",
    "load_config",
    "oracle_for",
    "parse_config",
    "plot_csv",
    "read_run_csv",
    "read_sweep_csv",
    "run",
    "short_term_throughput",
    "sweep",
    "with_overrides",
]
