"""
YAML parsing utilities for experiment configuration files.
"""

from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml


class ConfigFileError(ValueError):
    """Raised when an experiment file is not a YAML mapping."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        super().__init__(message)
        self.line = line


def _error_line(error: yaml.YAMLError) -> Optional[int]:
    mark = getattr(error, "problem_mark", None)
    return None if mark is None else mark.line + 1


class YAMLParser:
    """Loads experiment files as mappings."""

    def __init__(self) -> None:
        self.data: Optional[Dict[str, Any]] = None

    def _accept(self, data: Any, source: str) -> Dict[str, Any]:
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigFileError(f"{source} does not contain a mapping")
        self.data = data
        return data

    def load_file(self, file_path: Union[str, Path]) -> Dict[str, Any]:
        """
        Load and parse a YAML experiment file.

        An empty file yields an empty mapping.

        Raises:
            FileNotFoundError: If the file doesn't exist
            ConfigFileError: If the YAML is malformed or not a mapping
        """
        file_path = Path(file_path)
        if not file_path.exists():
            raise FileNotFoundError(f"YAML file not found: {file_path}")

        with open(file_path, "r", encoding="utf-8") as file:
            text = file.read()
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            line = _error_line(e)
            where = f"{file_path}:{line}" if line else str(file_path)
            raise ConfigFileError(f"Error parsing YAML file {where}: {e}", line=line)
        return self._accept(data, f"YAML file {file_path}")

    def load_string(self, yaml_string: str) -> Dict[str, Any]:
        try:
            data = yaml.safe_load(yaml_string)
        except yaml.YAMLError as e:
            raise ConfigFileError(f"Error parsing YAML string: {e}", line=_error_line(e))
        return self._accept(data, "YAML string")
