# Tables
# Frequency-tabulated 3x3 complex tensors with bounds-checked spline interpolation

from pathlib import Path
from typing import Callable, Union

import numpy as np
import pandas as pd
from scipy.interpolate import make_interp_spline

from .errors import FrequencyRangeError

COMPONENTS = ("xx", "xy", "xz", "yx", "yy", "yz", "zx", "zy", "zz")
COLUMNS = ["omega"] + [f"{part}(G{comp})" for comp in COMPONENTS for part in ("Re", "Im")]


class FrequencyLookup:
    """A frequency lookup that checks bounds, no extrapolation"""

    def __init__(self, lower, upper):
        self.lower = float(lower)
        self.upper = float(upper)

    def get(self, values):
        values = np.asarray(values, dtype=float)
        if not np.all((self.lower <= values) & (values <= self.upper)):
            raise FrequencyRangeError(
                f"frequency outside the tabulated interval [{self.lower:.6g}, {self.upper:.6g}] rad/s"
            )
        return values

    def __contains__(self, value):
        return self.lower <= value <= self.upper


class GreenTable:
    """Frequency-tabulated Green tensor for one pair of points.

    The dataframe holds an `omega` column (rad/s, strictly increasing) followed by the
    real and imaginary parts of the nine tensor entries in row-major order:
    `Re(Gxx), Im(Gxx), Re(Gxy), ..., Im(Gzz)`. Real and imaginary parts are interpolated
    separately with a spline of the given order (1 linear, 3 cubic).
    """

    def __init__(self, df: pd.DataFrame, order: int = 3):
        missing = [col for col in COLUMNS if col not in df.columns]
        if missing:
            raise ValueError(f"table is missing columns {missing}")
        if order not in (1, 3):
            raise ValueError(f"interpolation order must be 1 or 3, got {order}")

        omega = df["omega"].to_numpy(dtype=float)
        values = df[COLUMNS[1:]].to_numpy(dtype=float)
        if len(omega) < 2:
            raise ValueError("table needs at least two frequencies")
        if not np.all(np.diff(omega) > 0):
            raise ValueError("table frequency grid must be strictly increasing")
        if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(values))):
            raise ValueError("table contains non-finite values")

        self.order = order
        self.omega = omega
        self.values = (values[:, 0::2] + 1j * values[:, 1::2]).reshape(-1, 3, 3)
        self.lookup = FrequencyLookup(omega[0], omega[-1])

        k = min(order, len(omega) - 1)
        self._real = make_interp_spline(omega, values[:, 0::2], k=k)
        self._imag = make_interp_spline(omega, values[:, 1::2], k=k)
        self.df = df[COLUMNS].reset_index(drop=True)

    @property
    def interval(self):
        return self.lookup.lower, self.lookup.upper

    def get(self, omega):
        """Interpolated tensor, shape (3, 3) for scalar ω or (n, 3, 3) for an array."""
        omega = self.lookup.get(omega)
        result = (self._real(omega) + 1j * self._imag(omega)).reshape(omega.shape + (3, 3))
        return result

    def __getitem__(self, omega):
        return self.get(omega)

    def __repr__(self):
        lower, upper = self.interval
        return f"<GreenTable nodes={len(self.omega)} interval=[{lower:.6g}, {upper:.6g}] order={self.order}>"

    @staticmethod
    def to_frame(omega, tensors) -> pd.DataFrame:
        """Flatten a (n, 3, 3) tensor array into the tabulated column layout."""
        tensors = np.asarray(tensors, dtype=complex).reshape(len(omega), 9)
        data = {"omega": np.asarray(omega, dtype=float)}
        for i, comp in enumerate(COMPONENTS):
            data[f"Re(G{comp})"] = tensors[:, i].real
            data[f"Im(G{comp})"] = tensors[:, i].imag
        return pd.DataFrame(data, columns=COLUMNS)

    @classmethod
    def from_function(cls, func: Callable, grid, order: int = 3):
        """Sample `func(omega) -> (n, 3, 3)` on `grid`, e.g. an analytic Green source."""
        grid = np.asarray(grid, dtype=float)
        return cls(cls.to_frame(grid, func(grid)), order=order)

    @classmethod
    def read_csv(cls, csv_path: Union[str, Path], order: int = 3):
        """Read a whitespace-delimited table whose header line is `# omega Re(Gxx) Im(Gxx) ...`"""
        with open(csv_path, encoding="utf-8") as handle:
            header = handle.readline().lstrip("#").split()
        if header != COLUMNS:
            raise ValueError(f"{csv_path}: header must be '# {' '.join(COLUMNS)}'")
        df = pd.read_csv(csv_path, sep=r"\s+", comment="#", header=None, names=COLUMNS)
        return cls(df, order=order)

    def to_csv(self, csv_path: Union[str, Path]):
        """Write the table in the format read by `read_csv`."""
        with open(csv_path, "w", encoding="utf-8", newline="") as handle:
            handle.write("# " + " ".join(COLUMNS) + "\n")
            self.df.to_csv(handle, sep=" ", header=False, index=False, float_format="%.17g")
