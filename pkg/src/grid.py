import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """
    A rectangle of the plane cut into square cells of side `h`.

    The rectangle is anchored at (x_min, y_min); the cell count along each
    axis is rounded up so the cells cover the whole rectangle.
    """
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    h: float

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise ValueError("Invalid grid spacing.")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("Invalid grid rectangle.")

    @staticmethod
    def square(half_width: float, h: float, center: complex = 0j) -> 'GridSpec':
        return GridSpec(center.real - half_width, center.real + half_width,
                        center.imag - half_width, center.imag + half_width, h)

    @property
    def width(self) -> int:
        return math.ceil((self.x_max - self.x_min) / self.h - 1e-9)

    @property
    def height(self) -> int:
        return math.ceil((self.y_max - self.y_min) / self.h - 1e-9)

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def xs(self) -> np.ndarray:
        return self.x_min + (np.arange(self.width) + 0.5) * self.h

    def ys(self) -> np.ndarray:
        return self.y_min + (np.arange(self.height) + 0.5) * self.h

    def centers(self, pad: int = 0) -> np.ndarray:
        """
        Complex cell centres, indexed [x, y]; `pad` adds ghost cells on every side.
        """
        xs = self.x_min + (np.arange(-pad, self.width + pad) + 0.5) * self.h
        ys = self.y_min + (np.arange(-pad, self.height + pad) + 0.5) * self.h
        return xs[:, None] + 1j * ys[None, :]

    def contains_disk(self, center: complex, radius: float, margin: float = 0.0) -> bool:
        """
        Whether the disk, widened by `margin`, lies inside the cells; edges are compared to 1e-9 h.
        """
        reach = radius + margin - 1e-9 * self.h
        x_hi = self.x_min + self.width * self.h
        y_hi = self.y_min + self.height * self.h
        return (center.real - reach >= self.x_min and center.real + reach <= x_hi
                and center.imag - reach >= self.y_min and center.imag + reach <= y_hi)

    def to_dict(self) -> dict:
        return {"xMin": self.x_min, "xMax": self.x_max, "yMin": self.y_min, "yMax": self.y_max, "h": self.h}

    @staticmethod
    def from_dict(d: dict) -> 'GridSpec':
        return GridSpec(float(d["xMin"]), float(d["xMax"]), float(d["yMin"]), float(d["yMax"]), float(d["h"]))


class GridField:
    """
    Scalar samples (potentials) or cell masses (densities) on a grid.
    """
    def __init__(self, spec: GridSpec, values: np.ndarray, mask: Optional[np.ndarray] = None) -> None:
        """
        The constructor.

        -- PARAMETERS --
        spec: The grid geometry.
        values: A 2D array indexed [x, y]. Entries under `mask` are not numbers.
        mask: Cells flagged as undefined, e.g. where a potential is -inf.
        """
        if values.shape != (spec.width, spec.height):
            raise ValueError("Invalid grid values: shape does not match the grid.")
        self._spec: GridSpec = spec
        self._mask: np.ndarray = np.zeros(values.shape, dtype=bool) if mask is None else mask.astype(bool)
        self._values: np.ndarray = np.where(self._mask, np.nan, values)

    @property
    def spec(self) -> GridSpec:
        return self._spec

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    @property
    def width(self) -> int:
        return self._spec.width

    @property
    def height(self) -> int:
        return self._spec.height

    def total(self, region: Optional[np.ndarray] = None) -> float:
        """
        Sum of the defined values, optionally restricted to a boolean region.
        """
        keep = ~self._mask if region is None else (~self._mask & region)
        return math.fsum(self._values[keep].tolist())

    def to_csv(self, path: Path) -> None:
        """
        Write (x, y, value) rows plus a JSON header next to the CSV.

        Floats use the shortest round-trip representation; masked cells are written as "nan".
        """
        xs, ys = self._spec.xs(), self._spec.ys()
        with path.open("w", newline="", encoding="utf-8") as file:
            writer = csv.writer(file, lineterminator="\n")
            writer.writerow(["x", "y", "value"])
            for i in range(self.width):
                for j in range(self.height):
                    writer.writerow([repr(float(xs[i])), repr(float(ys[j])), repr(float(self._values[i, j]))])
        header = {"bounds": self._spec.to_dict(), "width": self.width, "height": self.height,
                  "maskedCells": int(self._mask.sum())}
        with path.with_suffix(".json").open("w", encoding="utf-8") as file:
            json.dump(header, file, indent=2, sort_keys=True)
            file.write("\n")
