import json
import logging
from importlib import metadata
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

from patchkpp.access.config.constants import MANIFEST_NAME, VERSIONED_PACKAGES
from patchkpp.access.config.contracts import Manifest, RunConfig
from patchkpp.utility.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


def _read_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as error:
        raise ConfigurationError(f"config file not found: {path}") from error
    except json.JSONDecodeError as error:
        raise ConfigurationError(f"config file is not valid JSON: {error}") from error


def load_config(path: Path) -> RunConfig:
    """RunConfig from a config file, or from the config block of a manifest."""
    data: dict = _read_json(path)
    if "command" in data and "versions" in data:
        if data.get("config") is None:
            message: str = f"manifest {path} records no config "
            message += f"(command {data['command']!r} runs without one)"
            raise ConfigurationError(message)
        logger.info("re-running the manifest %s", path)
        data = data["config"]
    return RunConfig.model_validate(data)


def read_initial_file(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Sorted (x, u) samples from a CSV with columns x and u."""
    try:
        frame: pd.DataFrame = pd.read_csv(path)
    except FileNotFoundError as error:
        raise ConfigurationError(f"initial-data file not found: {path}") from error
    missing: set[str] = {"x", "u"} - set(frame.columns)
    if missing:
        raise ConfigurationError(f"initial-data file lacks columns {sorted(missing)}")
    frame = frame.sort_values("x")
    return frame["x"].to_numpy(dtype=float), frame["u"].to_numpy(dtype=float)


def write_csv(frame: pd.DataFrame, directory: Path, name: str) -> Path:
    path: Path = Path(directory) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.debug("wrote %d rows to %s", len(frame), path)
    return path


def write_json(model: BaseModel, directory: Path, name: str) -> Path:
    path: Path = Path(directory) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2))
    logger.debug("wrote %s", path)
    return path


def package_versions() -> dict[str, str]:
    versions: dict[str, str] = {}
    for package in VERSIONED_PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def write_manifest(
    command: str,
    config: Optional[RunConfig],
    seed: int,
    outputs: list[Path],
    directory: Path,
) -> Path:
    kwargs = dict(
        command=command,
        seed=seed,
        config=config,
        versions=package_versions(),
        outputs=sorted(Path(path).name for path in outputs),
    )
    return write_json(Manifest(**kwargs), directory, MANIFEST_NAME)
