"""Differentiable waveform metrics and weighted combinations of them.

Every metric returns a scalar :class:`~graf.autodiff.Var`; when its input is
on a tape the result is too, so one ``backward`` yields the gradient of any
weighted combination.

Sidelobe metrics work on either surface layout. The mainlobe is the box
``|delay| <= g_k, |doppler| <= g_m`` around the origin (centered
coordinates); everything else is sidelobe.
"""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .ambiguity import AmbiguitySurface, Waveform, ambiguity, zero_doppler_cut
from .complex_core import centered_axis, fftshift2
from .errors import InvalidArgumentError

METRICS = (
    "match",
    "psl",
    "isl",
    "mainlobe_width",
    "constant_modulus",
    "spectral_variance",
    "phase_smoothness",
)
SURFACE_METRICS = {"match", "psl", "isl", "mainlobe_width"}

DEFAULT_GAMMA = 50.0
DEFAULT_ALPHA = 2000.0


@dataclass(frozen=True)
class ExclusionRegion:
    half_width_delay: int = 1
    half_width_doppler: int = 1

    def __post_init__(self):
        if self.half_width_delay < 0 or self.half_width_doppler < 0:
            raise InvalidArgumentError("exclusion half-widths must be non-negative")

    def sidelobe_mask(self, n, layout="raw", zero_doppler=False):
        """Boolean ``n x n`` mask of sidelobe cells in the given layout."""
        if layout == "shifted":
            ax = centered_axis(n)
        else:
            ax = np.where(np.arange(n) < (n + 1) // 2, np.arange(n), np.arange(n) - n)
        delay = np.abs(ax)[:, None]
        doppler = np.abs(ax)[None, :]
        mask = (delay > self.half_width_delay) | (doppler > self.half_width_doppler)
        if zero_doppler:
            mask &= ax[None, :] == 0
        if not mask.any():
            raise InvalidArgumentError(
                f"sidelobe region is empty for N={n} with exclusion "
                f"({self.half_width_delay}, {self.half_width_doppler})"
            )
        return mask


def _signal(s):
    if isinstance(s, Waveform):
        s = s.samples
    return ad.as_var(s)


def _origin_value(surface):
    return ad.op_take(surface.chi, surface.origin)


def psl(surface, region=ExclusionRegion(), zero_doppler=False):
    """Peak sidelobe level: max sidelobe cell over the origin cell (power ratio)."""
    mask = region.sidelobe_mask(surface.n, surface.layout, zero_doppler)
    peak, _ = ad.op_max_with_argmax(ad.op_take(surface.chi, mask))
    return ad.op_div_scalar(peak, _origin_value(surface))


def isl(surface, region=ExclusionRegion()):
    """Integrated sidelobe level: summed sidelobe power over the origin cell."""
    mask = region.sidelobe_mask(surface.n, surface.layout)
    total = ad.op_sum(ad.op_take(surface.chi, mask))
    return ad.op_div_scalar(total, _origin_value(surface))


def to_db(ratio):
    return 10.0 * math.log10(ratio)


def mainlobe_width_diff(cut, gamma=DEFAULT_GAMMA):
    """Soft mainlobe width ``sum |tau| * sigmoid(gamma * (cut - cut[0] / 2))``.

    ``cut`` is a zero-Doppler cut in centered order (zero delay at index
    ``N // 2``). Pass it pre-divided by its zero-delay value so that
    ``gamma`` is scale free.
    """
    if not gamma > 0:
        raise InvalidArgumentError("gamma must be positive")
    cut = ad.as_var(cut)
    n = cut.value.size
    centre = ad.op_take(cut, n // 2)
    excess = ad.op_sub(cut, ad.op_mul_scalar(centre, 0.5))
    soft = ad.op_sigmoid(ad.op_mul_scalar(excess, gamma))
    return ad.op_sum(ad.op_mul_scalar(soft, np.abs(centered_axis(n)).astype(float)))


def spectral_variance(s):
    """Population variance of the power spectrum normalized to unit sum."""
    s = _signal(s)
    if s.value.size < 2:
        raise InvalidArgumentError("spectral_variance needs N >= 2")
    power = ad.op_power_spectrum(s)
    total = ad.op_sum(power)
    if total.value <= 0:
        raise InvalidArgumentError("spectral_variance is undefined for an all-zero signal")
    return ad.op_variance(ad.op_div_scalar(power, total))


def constant_modulus_penalty(s):
    """Population variance of ``|s|``."""
    s = _signal(s)
    if s.value.size < 2:
        raise InvalidArgumentError("constant_modulus_penalty needs N >= 2")
    return ad.op_variance(ad.op_abs(s))


def match_loss(surface, target):
    """Squared Frobenius distance to a target surface of the same layout."""
    if isinstance(target, AmbiguitySurface):
        if target.layout != surface.layout:
            raise InvalidArgumentError(
                f"layout mismatch: surface is {surface.layout}, target is {target.layout}"
            )
        target = target.values
    target = np.asarray(target, dtype=np.float64)
    if target.shape != surface.values.shape:
        raise InvalidArgumentError(f"shape mismatch {surface.values.shape} vs {target.shape}")
    diff = ad.op_sub(surface.chi, target)
    return ad.op_sum(ad.op_mul(diff, diff))


def phase_smoothness(phases):
    """``sum wrap(theta[n+1] - theta[n])**2`` over circular neighbours.

    Accepts a phase-only :class:`Waveform` or a real phase vector/variable.
    """
    if isinstance(phases, Waveform):
        if phases.phases is None:
            raise InvalidArgumentError("phase_smoothness needs a phase-only waveform")
        phases = phases.phases
    phases = ad.as_var(phases)
    if np.iscomplexobj(phases.value):
        raise InvalidArgumentError("phase_smoothness needs real phases, not complex samples")
    d = ad.op_wrapped_diff(phases)
    return ad.op_sum(ad.op_mul(d, d))


# ------------------------------------------------------------- combinations


@dataclass
class LossTerm:
    metric: str
    weight: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.metric not in METRICS:
            raise InvalidArgumentError(f"unknown metric {self.metric!r}; expected one of {METRICS}")
        if not (math.isfinite(self.weight) and self.weight >= 0):
            raise InvalidArgumentError(f"weight for {self.metric} must be finite and >= 0")

    def region(self):
        return ExclusionRegion(int(self.params.get("g_k", 1)), int(self.params.get("g_m", 1)))


@dataclass
class LossSpec:
    """Weighted sum of metric terms.

    ``target`` (an :class:`AmbiguitySurface` or array) is required by a
    ``match`` term; array targets are taken to be in shifted layout unless
    the term's params say ``{"layout": "raw"}``.
    """

    terms: list
    gamma: float = DEFAULT_GAMMA
    alpha: float = DEFAULT_ALPHA
    target: object = None

    def __post_init__(self):
        self.terms = [t if isinstance(t, LossTerm) else LossTerm(**t) for t in self.terms]
        if not self.terms:
            raise InvalidArgumentError("a LossSpec needs at least one term")
        if not self.gamma > 0 or not self.alpha > 0:
            raise InvalidArgumentError("gamma and alpha must be positive")

    @classmethod
    def from_dict(cls, d):
        return cls(
            terms=d["terms"],
            gamma=d.get("gamma", DEFAULT_GAMMA),
            alpha=d.get("alpha", DEFAULT_ALPHA),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_dict(self):
        return {"terms": [asdict(t) for t in self.terms], "gamma": self.gamma, "alpha": self.alpha}

    def to_json(self):
        return json.dumps(self.to_dict())


class _Context:
    """Per-signal cache so several terms share one surface."""

    def __init__(self, s):
        self.s = s
        self._surface = None

    @property
    def surface(self):
        if self._surface is None:
            self._surface = ambiguity(self.s, shifted=True)
        return self._surface


def _target_values(spec, term, surface):
    target = spec.target
    if target is None:
        raise InvalidArgumentError("match term requires a target surface")
    if isinstance(target, AmbiguitySurface):
        values, layout = target.values, target.layout
    else:
        values, layout = np.asarray(target, dtype=np.float64), term.params.get("layout", "shifted")
    if layout == "raw":
        values = fftshift2(values)
    if values.shape != surface.values.shape:
        raise InvalidArgumentError(f"target shape {values.shape} does not match {surface.values.shape}")
    return values


def _term_value(term, spec, ctx, phases):
    m = term.metric
    if m == "psl":
        return psl(ctx.surface, term.region(), bool(term.params.get("zero_doppler", False)))
    if m == "isl":
        return isl(ctx.surface, term.region())
    if m == "match":
        return match_loss(ctx.surface, _target_values(spec, term, ctx.surface))
    if m == "mainlobe_width":
        cut = zero_doppler_cut(ctx.surface)
        cut = ad.op_div_scalar(cut, ad.op_take(cut, cut.value.size // 2))
        return mainlobe_width_diff(cut, float(term.params.get("gamma", spec.gamma)))
    if m == "constant_modulus":
        return constant_modulus_penalty(ctx.s)
    if m == "spectral_variance":
        return spectral_variance(ctx.s)
    if m == "phase_smoothness":
        if phases is None:
            raise InvalidArgumentError("phase_smoothness term needs the phase vector (phase-only waveform)")
        return phase_smoothness(phases)
    raise InvalidArgumentError(f"unknown metric {m!r}")


def _phases_of(s, phases):
    if phases is None and isinstance(s, Waveform):
        return s.phases
    return phases


def composite_loss(s, spec, phases=None, _ctx=None):
    """``sum_i weight_i * metric_i(s)`` on a single tape.

    Terms with zero weight are skipped. ``phases`` supplies the phase
    variable for a ``phase_smoothness`` term.
    """
    phases = _phases_of(s, phases)
    ctx = _ctx or _Context(_signal(s))
    total = None
    for term in spec.terms:
        if term.weight == 0:
            continue
        value = ad.op_mul_scalar(_term_value(term, spec, ctx, phases), term.weight)
        total = value if total is None else ad.op_add(total, value)
    if total is None:
        # every weight is zero; keep a tracked zero so backward still works
        total = ad.op_mul_scalar(ad.op_sum(ad.op_abs2(ctx.s)), 0.0)
    return total


def experiment_loss(s, lam, alpha=DEFAULT_ALPHA, region=ExclusionRegion()):
    """``PSL + lam * spectral_variance * alpha`` with full-plane linear PSL."""
    if not lam >= 0:
        raise InvalidArgumentError("lambda must be >= 0")
    if not alpha > 0:
        raise InvalidArgumentError("alpha must be positive")
    s = _signal(s)
    peak = psl(ambiguity(s, shifted=True), region)
    if lam == 0:
        return peak
    return ad.op_add(peak, ad.op_mul_scalar(spectral_variance(s), lam * alpha))


def experiment_spec(lam, alpha=DEFAULT_ALPHA, region=ExclusionRegion()):
    """The experiment loss expressed as a :class:`LossSpec`."""
    return LossSpec(
        terms=[
            LossTerm("psl", 1.0, {"g_k": region.half_width_delay, "g_m": region.half_width_doppler}),
            LossTerm("spectral_variance", lam * alpha),
        ],
        alpha=alpha,
    )


@dataclass
class ScenarioSet:
    """Weighted scenarios, each a :class:`LossSpec`: ``[(spec, weight), ...]``."""

    scenarios: list

    def __post_init__(self):
        if not self.scenarios:
            raise InvalidArgumentError("a ScenarioSet needs at least one scenario")
        for _, w in self.scenarios:
            if not (math.isfinite(w) and w >= 0):
                raise InvalidArgumentError("scenario weights must be finite and >= 0")

    def __len__(self):
        return len(self.scenarios)


def multi_scenario_loss(s, scenario_set, phases=None):
    """``sum_i weight_i * composite_loss(s, spec_i)``; scenarios share one surface."""
    if isinstance(scenario_set, (list, tuple)):
        scenario_set = ScenarioSet(list(scenario_set))
    phases = _phases_of(s, phases)
    ctx = _Context(_signal(s))
    total = None
    for spec, weight in scenario_set.scenarios:
        value = ad.op_mul_scalar(composite_loss(ctx.s, spec, phases, _ctx=ctx), weight)
        total = value if total is None else ad.op_add(total, value)
    return total


def waveform_metrics(s, region=ExclusionRegion()):
    """Plain-float report: linear/dB PSL, ISL, spectral variance, modulus spread."""
    s = _signal(s)
    surface = ambiguity(s.value, shifted=True)
    p = psl(surface, region).item()
    return {
        "psl_linear": p,
        "psl_db": to_db(p),
        "isl": isl(surface, region).item(),
        "spectral_variance": spectral_variance(s.value).item(),
        "max_modulus_error": float(np.max(np.abs(np.abs(s.value) - 1.0))),
    }
