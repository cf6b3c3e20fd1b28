"""
File formats for OWNBM Lab.
"""

from .instance_io import (
    InstanceFormatError,
    load_instance,
    parse,
    read_run_log,
    save_instance,
    serialize,
    write_run_log,
)
from .yaml_parser import ConfigFileError, YAMLParser

__all__ = [
    "ConfigFileError",
    "InstanceFormatError",
    "YAMLParser",
    "load_instance",
    "parse",
    "read_run_log",
    "save_instance",
    "serialize",
    "write_run_log",
]
