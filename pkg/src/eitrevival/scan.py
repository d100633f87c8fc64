"""Detuning and field scans of the oscillation extrema, and detuning optimization."""
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._golden import golden_section_minimize
from .interference import (
    DecayEnvelope,
    ModelParams,
    oscillation_extrema,
    phase_extrema,
)
from .populations import (
    PumpState,
    SelectivityModel,
    apply_detuning_selectivity,
    pump_distribution,
    storage_weight,
)
from .zeeman import DEFAULT_CONSTANTS, DomainError, Scheme, spin_wave_detuning

GRID_LO = -2.0  # MHz
GRID_STEP = 0.05  # MHz
REFINE_TOL = 1e-3  # MHz
PLATEAU_FRACTION = 0.01


class ScanVariable(enum.Enum):
    DETUNING = "detuning"
    FIELD = "field"


class Objective(enum.Enum):
    MINIMIZE_R = "minimize_r"
    MAXIMIZE_AMAX = "maximize_amax"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        for member in cls:
            if key in (member.value, member.value.replace("_", "")):
                return member
        raise DomainError(f"unknown objective {value!r}")


@dataclass(frozen=True)
class ScanSpec:
    variable: ScanVariable
    lo: float
    hi: float
    n_points: int
    pump: PumpState = field(default_factory=PumpState)
    sel: SelectivityModel = field(default_factory=SelectivityModel)
    b_field: float = 1.0  # G, held fixed in detuning scans
    amplitude_scale: float = 1.0
    window: tuple = None  # us; None means one full oscillation cycle
    consts: object = DEFAULT_CONSTANTS

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError("scan range needs lo < hi")
        if self.n_points < 2:
            raise DomainError("scan needs at least two points")

    @property
    def grid(self):
        return np.linspace(self.lo, self.hi, self.n_points)


@dataclass(frozen=True)
class ScanRow:
    x: float
    a_max: float
    a_min: float
    r: float

    def __post_init__(self):
        if self.a_min > self.a_max * (1 + 1e-12) + 1e-300:
            raise DomainError("scan row has a_min > a_max")


def extrema_at(q, sel, b_field, amplitude_scale=1.0, window=None, consts=DEFAULT_CONSTANTS):
    """``(a_max, a_min, r)`` for pumped weights ``q`` at one detuning and field.

    The overall amplitude carries the square of the total storage strength,
    so ``a_max`` peaks where the populated resonances are hit. ``r`` comes
    from the normalized coherences and stays defined where that strength
    underflows.
    """
    coh = apply_detuning_selectivity(q, sel, b_field, consts)
    support = coh.support
    if len(support) <= 2:
        # single cosine: extrema at phase 0 and pi
        pa = coh.p(support[0])
        pb = coh.p(support[-1]) if len(support) == 2 else 0.0
        u_max, u_min = (pa + pb) ** 2, (pa - pb) ** 2
    else:
        params = ModelParams(Scheme.SIGMA_PLUS, coh, b_field, DecayEnvelope.none(), 1.0, consts)
        if window is None or b_field == 0:
            u_max, u_min = phase_extrema(params)
        else:
            u_max, u_min = oscillation_extrema(params, window)
    scale = amplitude_scale * storage_weight(q, sel, b_field, consts) ** 2
    r = (u_max - u_min) / u_max if u_max > 0 else 0.0
    return scale * u_max, scale * u_min, r


def _run(func, xs, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, xs))
    return [func(x) for x in xs]


def scan_detuning(spec, workers=None):
    """Extrema and relative amplitude over a grid of detunings (MHz)."""
    if spec.variable is not ScanVariable.DETUNING:
        raise DomainError("scan_detuning needs a detuning scan spec")
    q = pump_distribution(spec.pump)

    def row(x):
        sel = spec.sel.with_detuning(float(x))
        return ScanRow(float(x), *extrema_at(q, sel, spec.b_field, spec.amplitude_scale, spec.window, spec.consts))

    return _run(row, spec.grid, workers)


def scan_field(spec, workers=None):
    """Scan the field (G), detuning each point onto the m = 3 resonance."""
    if spec.variable is not ScanVariable.FIELD:
        raise DomainError("scan_field needs a field scan spec")
    if spec.lo < 0:
        raise DomainError("field scan must stay at non-negative fields")
    q = pump_distribution(spec.pump)

    def row(b):
        sel = spec.sel.with_detuning(spin_wave_detuning(3, 3, float(b), spec.consts))
        return ScanRow(float(b), *extrema_at(q, sel, float(b), spec.amplitude_scale, spec.window, spec.consts))

    return _run(row, spec.grid, workers)


@dataclass(frozen=True)
class DetuningOptimum:
    detuning: float  # refined optimum, MHz
    value: float
    plateau_onset: float  # smallest grid detuning within 1% of the grid optimum
    flat: bool  # objective within 1% across the whole grid
    grid: np.ndarray = field(repr=False, default=None)
    grid_values: np.ndarray = field(repr=False, default=None)


def optimize_detuning(
    b_field,
    pump=PumpState(),
    sel=SelectivityModel(),
    objective=Objective.MINIMIZE_R,
    step=GRID_STEP,
    xtol=REFINE_TOL,
    consts=DEFAULT_CONSTANTS,
    workers=None,
):
    """Best control detuning for the given field.

    Grid search over ``[-2, delta_3 + 5 * width]`` MHz followed by
    golden-section refinement around the best grid point. Since the relative
    amplitude flattens out at large detuning, the smallest grid detuning
    whose value is within 1% of the grid optimum is reported as
    ``plateau_onset``. A flat objective returns the smallest grid detuning.
    """
    objective = Objective.parse(objective)
    q = pump_distribution(pump)
    hi = spin_wave_detuning(3, 3, b_field, consts) + 5.0 * sel.eit_width
    n = int(math.floor((hi - GRID_LO) / step + 1e-9)) + 1
    grid = GRID_LO + step * np.arange(n)
    index = 2 if objective is Objective.MINIMIZE_R else 0
    sign = 1.0 if objective is Objective.MINIMIZE_R else -1.0

    def cost(x):
        return sign * extrema_at(q, sel.with_detuning(float(x)), b_field, consts=consts)[index]

    values = np.array(_run(cost, grid, workers))
    i = int(np.argmin(values))
    best_x, best_c = float(grid[i]), float(values[i])
    lo, hi_b = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
    if hi_b > lo:
        x_ref, c_ref = golden_section_minimize(cost, lo, hi_b, xtol=xtol)
        if c_ref < best_c:
            best_x, best_c = x_ref, c_ref

    raw = sign * values
    target = sign * float(values[i])
    tol = PLATEAU_FRACTION * abs(target) if target != 0 else 1e-15
    within = np.abs(raw - target) <= tol
    onset = float(grid[np.argmax(within)])
    flat = bool(np.all(within))
    if flat:
        # first grid point attaining the grid optimum up to rounding, unrefined
        j = int(np.argmax(values <= values[i] + 1e-13 * abs(values[i])))
        best_x, best_c = float(grid[j]), float(values[j])
    return DetuningOptimum(
        detuning=best_x,
        value=sign * best_c,
        plateau_onset=onset,
        flat=flat,
        grid=grid,
        grid_values=raw,
    )
