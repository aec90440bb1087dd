import copy
import hashlib
import json
import os
from pathlib import Path
from typing import Any, Optional

# Environment variable that overrides the output directory of the file.
OUTPUT_DIR_ENV: str = "ZEROS_OUTPUT_DIR"

# Keys that do not change any result and are left out of the config hash.
_UNHASHED: tuple[str, ...] = ("outputDir", "threads")


class ConfigError(ValueError):
    """
    The configuration is missing a value or holds an invalid one.
    """


class Config:
    """
    Configuration manager.
    """
    def __init__(self) -> None:
        self._cfg: dict = {}
        self._path: Optional[Path] = None

    @property
    def path(self) -> Optional[Path]:
        """
        The file the configuration was loaded from.
        """
        return self._path

    @property
    def seed(self) -> int:
        """
        The master seed every random stream is derived from.
        """
        if self._cfg.get("seed") is None:
            raise ConfigError("A seed is required.")
        return int(self._cfg["seed"])

    @property
    def output_dir(self) -> Path:
        """
        Where result files are written.
        """
        return Path(self._cfg.get("outputDir", "output"))

    @property
    def threads(self) -> Optional[int]:
        """
        The size of the trial worker pool; None means the available parallelism.
        """
        threads = self._cfg.get("threads")
        return None if threads is None else int(threads)

    @property
    def measures(self) -> list[dict]:
        """
        The root distributions, one per polynomial in the sum.
        """
        return self._cfg["measures"]

    @property
    def m(self) -> int:
        """
        The number of polynomials in the sum.
        """
        return int(self._cfg.get("m", len(self.measures)))

    @property
    def n(self) -> list[int]:
        """
        The degrees to run, as a list.
        """
        n = self._cfg["n"]
        return [int(v) for v in n] if isinstance(n, list) else [int(n)]

    @property
    def trials(self) -> int:
        return int(self._cfg.get("trials", 1))

    @property
    def grid(self) -> dict[str, float]:
        """
        Either explicit bounds (xMin, xMax, yMin, yMax, h) or a margin around the supports (margin, h).
        """
        return self._cfg.get("grid", {"margin": 2.0, "h": 0.01})

    @property
    def bumps(self) -> list[dict]:
        """
        The test functions, each with a center [re, im], a radius and an optional amplitude.
        """
        return self._cfg.get("bumps", [])

    @property
    def root_finder(self) -> dict[str, float]:
        return self._cfg.get("rootFinder", {})

    def command(self, name: str) -> dict[str, Any]:
        """
        The options of one command.
        """
        return self._cfg.get(name, {})

    @property
    def acceptance(self) -> dict[str, float]:
        """
        Fixed pass bounds, and the caps the pilot-derived thresholds must stay under.
        """
        return self._cfg.get("acceptance", {})

    def load(self, path: Path) -> None:
        """
        Load the configuration from a JSON file.
        """
        with path.open(encoding="utf-8") as file:
            self._cfg = json.load(file)
        self._path = path

    def override(self, seed: Optional[int] = None, out: Optional[str] = None, threads: Optional[int] = None,
                 n: Optional[list[int]] = None, trials: Optional[int] = None,
                 grid_h: Optional[float] = None) -> None:
        """
        Apply command-line overrides; the output directory falls back to the environment.
        """
        if seed is not None:
            self._cfg["seed"] = seed
        if out is not None:
            self._cfg["outputDir"] = out
        elif os.environ.get(OUTPUT_DIR_ENV):
            self._cfg["outputDir"] = os.environ[OUTPUT_DIR_ENV]
        if threads is not None:
            self._cfg["threads"] = threads
        if n is not None:
            self._cfg["n"] = list(n)
        if trials is not None:
            self._cfg["trials"] = trials
            if "trials" in self.command("diagnose"):
                self._cfg["diagnose"]["trials"] = trials
        if grid_h is not None:
            self._cfg["grid"] = {**self.grid, "h": grid_h}
            for name in ("compare", "diagnose"):
                if "gridH" in self.command(name):
                    self._cfg[name]["gridH"] = grid_h

    def validate(self) -> None:
        """
        Check the invariants every command relies on.
        """
        try:
            _ = self.seed
            if not isinstance(self._cfg.get("measures"), list) or len(self.measures) == 0:
                raise ConfigError("At least one measure is required.")
            if self.m != len(self.measures):
                raise ConfigError("m must equal the number of measures.")
            if "n" not in self._cfg or any(n < 2 for n in self.n):
                raise ConfigError("Every degree n must be at least 2.")
            if self.trials < 1:
                raise ConfigError("At least one trial is required.")
            if self.threads is not None and self.threads < 1:
                raise ConfigError("Invalid number of threads.")
            if not float(self.grid.get("h", 0)) > 0:
                raise ConfigError("Invalid grid spacing.")
            for bump in self.bumps:
                if not float(bump.get("radius", 0)) > 0:
                    raise ConfigError("Invalid bump radius.")
        except (KeyError, TypeError, ValueError) as err:
            if isinstance(err, ConfigError):
                raise
            raise ConfigError(f"Invalid configuration: {err}") from err

    def hash(self) -> str:
        """
        SHA-256 of the canonical JSON of every result-affecting value.
        """
        doc = {k: v for k, v in self._cfg.items() if k not in _UNHASHED}
        text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        return copy.deepcopy(self._cfg)
