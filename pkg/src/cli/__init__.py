"""
Command line front end: run configurations, services and subcommands.
"""

from .commands import cmd_critical_delay, cmd_feedback, cmd_simulate, cmd_sweep, cmd_validate
from .config import RunConfig, get_config, load_run_config, parse_run_config

__all__ = [
    "cmd_critical_delay",
    "cmd_feedback",
    "cmd_simulate",
    "cmd_sweep",
    "cmd_validate",
    "RunConfig",
    "get_config",
    "load_run_config",
    "parse_run_config",
]
