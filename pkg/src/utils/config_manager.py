"""Configuration Manager for ruinlab"""
import configparser
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from ..core.errors import ConfigError

ENV_PREFIX = 'RUINLAB_'


def _to_text(value: Any) -> str:
    """Render a JSON value the way it would appear in a .cfg file"""
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (list, tuple)):
        return ', '.join(_to_text(v) for v in value)
    return str(value)


class ConfigManager:
    """Layered configuration: file, environment, then explicit overrides"""

    def __init__(self, config_path: Optional[str] = None, use_env: bool = True):
        self.logger = logging.getLogger(__name__)

        # Load environment variables
        self.use_env = use_env
        if use_env:
            load_dotenv()

        # Set config path
        if config_path:
            self.config_path = Path(config_path)
        else:
            self.config_path = Path(__file__).parent.parent.parent / 'configs' / 'reference.cfg'

        self.config = self._load_config()
        self.overrides: Dict[str, Dict[str, str]] = {}

    def _load_config(self) -> Dict[str, Dict[str, str]]:
        """Load main configuration file (.json or [section] key = value text)"""
        if not self.config_path.exists():
            raise ConfigError(f"Config file not found: {self.config_path}", ['--config'])
        try:
            text = self.config_path.read_text(encoding='utf-8')
            if self.config_path.suffix.lower() == '.json':
                config = self._parse_json(text)
            else:
                config = self._parse_ini(text)
        except (configparser.Error, json.JSONDecodeError, UnicodeDecodeError) as e:
            raise ConfigError(f"Cannot parse config {self.config_path}: {e}", ['--config']) from e
        self.logger.info(f"Loaded config from {self.config_path}")
        return config

    @staticmethod
    def _parse_ini(text: str) -> Dict[str, Dict[str, str]]:
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=('#', ';'))
        parser.optionxform = str
        parser.read_string(text)
        return {section: dict(parser[section]) for section in parser.sections()}

    @staticmethod
    def _parse_json(text: str) -> Dict[str, Dict[str, str]]:
        data = json.loads(text)
        if not isinstance(data, dict) or not all(isinstance(v, dict) for v in data.values()):
            raise ConfigError("JSON config must map section names to objects", ['--config'])
        return {section: {k: _to_text(v) for k, v in values.items()} for section, values in data.items()}

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value with dot notation support"""
        # Explicit overrides first (command-line flags)
        value = self._get_nested(self.overrides, key)
        if value is not None:
            return value

        # Then environment variables
        if self.use_env:
            env_value = os.getenv(ENV_PREFIX + key.upper().replace('.', '_'))
            if env_value is not None:
                return env_value

        # Then the config file
        value = self._get_nested(self.config, key)
        if value is not None:
            return value

        return default

    def _get_nested(self, data: Dict, key: str) -> Any:
        """Get nested dictionary value using dot notation"""
        keys = key.split('.')
        value = data

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return None

        return value

    def set(self, key: str, value: Any):
        """Override a configuration value for this run"""
        section, _, name = key.partition('.')
        if not name:
            raise ConfigError(f"Config keys need a section: {key}", [key])
        self.overrides.setdefault(section, {})[name] = _to_text(value)

    def has(self, key: str) -> bool:
        """True when the key is set in any layer, even to an empty value"""
        return self.get(key) is not None

    def sections(self) -> List[str]:
        names = list(self.config)
        names.extend(s for s in self.overrides if s not in names)
        return names

    def keys(self, section: str) -> List[str]:
        names = list(self.config.get(section, {}))
        names.extend(k for k in self.overrides.get(section, {}) if k not in names)
        return names

    def to_text(self, comments: Optional[Dict[str, List[str]]] = None) -> str:
        """Canonical [section] / key = value rendering of the effective config"""
        comments = comments or {}
        blocks = []
        for section in self.sections():
            lines = [f'[{section}]']
            for key in self.keys(section):
                lines.append(f'{key} = {self.get(f"{section}.{key}")}')
            lines.extend(f'# {note}' for note in comments.get(section, []))
            blocks.append('\n'.join(lines))
        return '\n\n'.join(blocks) + '\n'
