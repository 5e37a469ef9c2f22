# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Experiment config provider"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import toml

from goal_coverage.exceptions import ConfigError

_MISSING = object()


@dataclass
class ConfigProvider:
    """Provides experiment settings from a parsed TOML document"""

    document: Mapping[str, Any] = field(default_factory=dict)
    path: Optional[Path] = None

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ConfigProvider":
        """Parse an experiment file"""
        path = Path(path)
        try:
            return cls(document=toml.load(path), path=path.resolve())
        except (OSError, toml.TomlDecodeError) as err:
            raise ConfigError(f"Can not read experiment config {path}: {err}") from err

    @classmethod
    def from_string(cls, text: str, root: Optional[Path] = None) -> "ConfigProvider":
        """Parse an in-memory document; relative paths resolve against ``root``"""
        try:
            document = toml.loads(text)
        except toml.TomlDecodeError as err:
            raise ConfigError(f"Experiment config is not valid TOML: {err}") from err
        return cls(document=document, path=None if root is None else Path(root).resolve() / "<string>")

    def get(self, name: str, default: Any = None) -> Any:
        """Get option by dotted name"""
        node: Any = self.document
        for part in name.split("."):
            if not isinstance(node, Mapping):
                return default
            node = node.get(part, _MISSING)
            if node is _MISSING:
                return default
        return node

    def section(self, name: str) -> dict:
        """Table by name, empty when absent"""
        value = self.get(name, {})
        if not isinstance(value, Mapping):
            raise ConfigError(f"[{name}] must be a table")
        return dict(value)

    @property
    def root(self) -> Path:
        """Get config root path"""
        return self.path.parent if self.path else Path.cwd()

    def resolve(self, value: Union[str, Path]) -> Path:
        """Path relative to the config root"""
        path = Path(value)
        return path if path.is_absolute() else self.root / path
