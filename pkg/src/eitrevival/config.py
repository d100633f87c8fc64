"""Flat ``key = value`` configuration files and CSV input/output."""
import csv
import io

import numpy as np

from .zeeman import PhysicalConstants

FLOAT_FORMAT = "%.9g"


class ConfigError(ValueError):
    """Malformed configuration or input file."""


def parse_config(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        values[key] = value
    return values


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


class Settings:
    """Typed view over merged config values (later sources win)."""

    def __init__(self, *sources):
        self.values = {}
        for src in sources:
            self.values.update({k: v for k, v in src.items() if v is not None})

    def __contains__(self, key):
        return key in self.values

    def get_str(self, key, default=None):
        return self.values.get(key, default)

    def get_float(self, key, default=None):
        if key not in self.values:
            return default
        try:
            return float(self.values[key])
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {self.values[key]!r}") from None

    def get_int(self, key, default=None):
        if key not in self.values:
            return default
        try:
            return int(self.values[key])
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {self.values[key]!r}") from None

    def get_bool(self, key, default=False):
        if key not in self.values:
            return default
        value = str(self.values[key]).strip().lower()
        if value in ("1", "true", "yes", "on"):
            return True
        if value in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {self.values[key]!r}")

    def constants(self):
        defaults = PhysicalConstants()
        return PhysicalConstants(
            g_factor_per_gauss=self.get_float("constants.g_mhz_per_gauss", defaults.g_factor_per_gauss),
            clock_frequency=self.get_float("constants.clock_ghz", defaults.clock_frequency),
            cs_mass=self.get_float("constants.mass_kg", defaults.cs_mass),
            signal_wavelength=self.get_float("constants.wavelength_nm", defaults.signal_wavelength),
        )


def format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return "" if value is None else str(value)


def write_csv(stream, header, rows):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])


def to_csv_text(header, rows):
    buf = io.StringIO()
    write_csv(buf, header, rows)
    return buf.getvalue()


def read_curve_csv(stream):
    """Read ``t_us,amplitude[,sigma]`` rows into a :class:`RetrievalCurve`."""
    from .estimation import RetrievalCurve

    reader = csv.reader(stream)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ConfigError("curve file is empty") from None
    if header[:2] != ["t_us", "amplitude"]:
        raise ConfigError(f"curve header must start with t_us,amplitude; got {','.join(header)}")
    has_sigma = len(header) > 2 and header[2] == "sigma"
    t, a, s = [], [], []
    for lineno, row in enumerate(reader, 2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            t.append(float(row[0]))
            a.append(float(row[1]))
            if has_sigma:
                s.append(float(row[2]))
        except (ValueError, IndexError):
            raise ConfigError(f"line {lineno}: malformed row {row!r}") from None
    return RetrievalCurve(np.array(t), np.array(a), np.array(s) if has_sigma else None)
