"""Data-generating processes: AR(1) mean with optional smooth-transition mean and ARCH variance."""

import logging
from dataclasses import dataclass, field, replace
from enum import StrEnum
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .transition import TransitionParams, transition_series


logger = logging.getLogger(__name__)

DEFAULT_BURN_IN = 100


class InvalidSpecError(ValueError):
    """DGP parameters violate stationarity, positivity or kind constraints."""

    pass


class PositivityViolationError(ArithmeticError):
    """Conditional variance h_t^2 became non-positive during generation."""

    def __init__(self, t: int, h2: float):
        super().__init__(f"conditional variance h^2 = {h2!r} <= 0 at t = {t}")
        self.t = t
        self.h2 = h2


class DgpKind(StrEnum):
    """The four simulation designs."""

    AR_HOMOSKEDASTIC = "ar_homoskedastic"
    TV_MEAN = "tv_mean"
    AR_ARCH = "ar_arch"
    TV_ARCH = "tv_arch"


@dataclass(frozen=True)
class MeanParams:
    """y_t = alpha0 + beta0 y_{t-1} + (alpha1 + beta1 y_{t-1}) F(t) + u_t."""

    alpha0: float = 1.0
    beta0: float = 0.3
    alpha1: float = 0.0
    beta1: float = 0.0
    transition: TransitionParams = field(default_factory=TransitionParams)

    def validate_stationary(self) -> None:
        """Raise InvalidSpecError unless the AR slope is stationary in both regimes."""
        # F lies in (-1/2, 1/2), so the regime slopes are beta0 -+ beta1/2
        for slope in (self.beta0, self.beta0 - self.beta1 / 2, self.beta0 + self.beta1 / 2):
            if abs(slope) >= 1:
                raise InvalidSpecError(
                    f"mean regime AR coefficient {slope} is not stationary "
                    f"(beta0={self.beta0}, beta1={self.beta1})"
                )

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready parameters."""
        return {
            "alpha0": self.alpha0,
            "beta0": self.beta0,
            "alpha1": self.alpha1,
            "beta1": self.beta1,
            "transition": self.transition.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MeanParams":
        """Inverse of to_dict; a missing transition means gamma = 0."""
        data = dict(data)
        transition = TransitionParams(**data.pop("transition", {}))
        return cls(transition=transition, **data)


@dataclass(frozen=True)
class VarianceParams:
    """h_t^2 = a0 + b0 u_{t-1}^2 + (a1 + b1 u_{t-1}^2) F(t)."""

    a0: float = 1.0
    b0: float = 0.0
    a1: float = 0.0
    b1: float = 0.0
    transition: TransitionParams = field(default_factory=TransitionParams)

    def __post_init__(self) -> None:
        if self.a0 - abs(self.a1) / 2 <= 0:
            raise InvalidSpecError(
                f"ARCH intercept not positive in every regime: a0={self.a0}, a1={self.a1}"
            )
        if self.b0 - abs(self.b1) / 2 < 0:
            raise InvalidSpecError(
                f"ARCH slope negative in some regime: b0={self.b0}, b1={self.b1}"
            )
        if self.b0 >= 1:
            raise InvalidSpecError(f"b0 must be < 1 for weak stationarity, got {self.b0}")

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready parameters."""
        return {
            "a0": self.a0,
            "b0": self.b0,
            "a1": self.a1,
            "b1": self.b1,
            "transition": self.transition.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "VarianceParams":
        """Inverse of to_dict; a missing transition means gamma = 0."""
        data = dict(data)
        transition = TransitionParams(**data.pop("transition", {}))
        return cls(transition=transition, **data)


@dataclass(frozen=True)
class DgpSpec:
    """One simulation design.

    variance = None means u_t is iid N(0, 1). When threshold_fraction is set,
    every transition threshold is c = threshold_fraction * sample_size.
    """

    kind: DgpKind
    mean: MeanParams = field(default_factory=MeanParams)
    variance: VarianceParams | None = None
    sample_size: int = 200
    burn_in: int = DEFAULT_BURN_IN
    threshold_fraction: float | None = None
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DgpKind(self.kind))
        if self.sample_size < 1:
            raise InvalidSpecError(f"sample_size must be >= 1, got {self.sample_size}")
        if self.burn_in < 0:
            raise InvalidSpecError(f"burn_in must be >= 0, got {self.burn_in}")
        if self.threshold_fraction is not None and self.threshold_fraction <= 0:
            raise InvalidSpecError(
                f"threshold_fraction must be > 0, got {self.threshold_fraction}"
            )
        self.mean.validate_stationary()

        mean_tv = self.mean.alpha1 != 0 or self.mean.beta1 != 0
        var_tv = self.variance is not None and (self.variance.a1 != 0 or self.variance.b1 != 0)
        if self.kind is DgpKind.AR_HOMOSKEDASTIC and (mean_tv or self.variance is not None):
            raise InvalidSpecError("ar_homoskedastic needs alpha1 = beta1 = 0 and unit normal errors")
        if self.kind is DgpKind.TV_MEAN and self.variance is not None:
            raise InvalidSpecError("tv_mean needs unit normal errors")
        if self.kind is DgpKind.AR_ARCH and (self.variance is None or var_tv):
            raise InvalidSpecError("ar_arch needs ARCH variance with a1 = b1 = 0")
        if self.kind is DgpKind.TV_ARCH and (self.variance is None or mean_tv):
            raise InvalidSpecError("tv_arch needs ARCH variance and alpha1 = beta1 = 0")

        if self.threshold_fraction is not None:
            c = self.threshold_fraction * self.sample_size
            object.__setattr__(self, "mean", replace(
                self.mean, transition=replace(self.mean.transition, c=c)
            ))
            if self.variance is not None:
                object.__setattr__(self, "variance", replace(
                    self.variance, transition=replace(self.variance.transition, c=c)
                ))
        if not self.label:
            object.__setattr__(self, "label", self.default_label())

    def default_label(self) -> str:
        """Label naming the parameters that vary across the preset tables."""
        m, v = self.mean, self.variance
        match self.kind:
            case DgpKind.AR_HOMOSKEDASTIC:
                return f"beta0={m.beta0:g}"
            case DgpKind.TV_MEAN:
                return f"alpha1={m.alpha1:g},beta1={m.beta1:g},gamma={m.transition.gamma:g}"
            case DgpKind.AR_ARCH:
                return f"b0={v.b0:g}"
            case DgpKind.TV_ARCH:
                return f"a1={v.a1:g},b1={v.b1:g},gamma={v.transition.gamma:g}"

    def at_sample_size(self, T: int) -> "DgpSpec":
        """Copy of this spec with sample size T (thresholds follow T when fractional)."""
        return replace(self, sample_size=T)

    def unconditional_variance_regimes(self) -> tuple[float, float]:
        """Unconditional variance of u_t in the F = -1/2 and F = +1/2 regimes."""
        if self.variance is None:
            return 1.0, 1.0
        v = self.variance
        low = (v.a0 - v.a1 / 2) / (1 - (v.b0 - v.b1 / 2))
        high = (v.a0 + v.a1 / 2) / (1 - (v.b0 + v.b1 / 2))
        return low, high

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready design, thresholds included."""
        return {
            "kind": self.kind.value,
            "label": self.label,
            "mean": self.mean.to_dict(),
            "variance": None if self.variance is None else self.variance.to_dict(),
            "sample_size": self.sample_size,
            "burn_in": self.burn_in,
            "threshold_fraction": self.threshold_fraction,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DgpSpec":
        """Inverse of to_dict."""
        variance = data.get("variance")
        return cls(
            kind=DgpKind(data["kind"]),
            mean=MeanParams.from_dict(data.get("mean", {})),
            variance=None if variance is None else VarianceParams.from_dict(variance),
            sample_size=int(data.get("sample_size", 200)),
            burn_in=int(data.get("burn_in", DEFAULT_BURN_IN)),
            threshold_fraction=data.get("threshold_fraction"),
            label=data.get("label", ""),
        )


@dataclass
class TimeSeries:
    """A simulated or observed series; latent_h2 is simulator diagnostics only."""

    values: NDArray[np.float64]
    latent_h2: NDArray[np.float64] | None = None

    def __len__(self) -> int:
        return len(self.values)


def simulate(
    spec: DgpSpec,
    seed: int | np.random.SeedSequence | np.random.Generator | None = None,
) -> TimeSeries:
    """Generate T + burn_in observations and keep the last T.

    The transition argument runs over t = 1 - burn_in, ..., T so F is continuous
    across the burn-in boundary. Initial conditions are y_0 = u_0 = 0.

    Args:
        spec: The design to simulate.
        seed: Anything numpy.random.default_rng accepts.

    Returns:
        TimeSeries with values y_1..y_T and the matching h_t^2.

    Raises:
        PositivityViolationError: If h_t^2 <= 0 at some step.
    """
    rng = np.random.default_rng(seed)
    n_total = spec.sample_size + spec.burn_in
    eps = rng.standard_normal(n_total)

    t_start = 1 - spec.burn_in
    f_mean = transition_series(n_total, spec.mean.transition, t_start)
    mean_shift = spec.mean.alpha1 * f_mean
    mean_slope = spec.mean.beta0 + spec.mean.beta1 * f_mean
    alpha0 = spec.mean.alpha0

    y = np.empty(n_total)
    h2 = np.ones(n_total)
    if spec.variance is None:
        u = eps
    else:
        v = spec.variance
        f_var = transition_series(n_total, v.transition, t_start)
        arch_const = v.a0 + v.a1 * f_var
        arch_slope = v.b0 + v.b1 * f_var
        u = np.empty(n_total)
        u_prev = 0.0
        for i in range(n_total):
            h2_i = arch_const[i] + arch_slope[i] * u_prev * u_prev
            if not h2_i > 0:
                raise PositivityViolationError(t_start + i, float(h2_i))
            h2[i] = h2_i
            u_prev = np.sqrt(h2_i) * eps[i]
            u[i] = u_prev

    # alpha0 + beta0 y + (alpha1 + beta1 y) F, grouped as alpha0 + alpha1 F + (beta0 + beta1 F) y
    y_prev = 0.0
    for i in range(n_total):
        y_prev = alpha0 + mean_shift[i] + mean_slope[i] * y_prev + u[i]
        y[i] = y_prev

    keep = slice(spec.burn_in, n_total)
    logger.debug("simulated %s T=%d burn_in=%d", spec.label, spec.sample_size, spec.burn_in)
    return TimeSeries(values=y[keep].copy(), latent_h2=h2[keep].copy())
