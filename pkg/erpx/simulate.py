"""
Synthetic data that emulates a reference dataset.

Features are drawn from N(mu, Sigma), where mu holds the reference column
means and Sigma is the sample covariance of the reference, optionally after
adding N(0, k * sigma) noise to every cell (k = 3 or 5, sigma the smallest
feature standard deviation of the reference). Responses follow a sparse
linear pattern on 10 random signal columns, or a two-regime mixture of such
patterns, rescaled to the reference response range plus N(0, 1) noise.
"""
import logging
from typing import Annotated, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import Design, NoiseLevel
from .core import Dataset, FeatureKind, require_trainable
from .exceptions import ContractViolation
from .log import kv
from .parallel import map_ordered
from .utils import derive_seed

logger = logging.getLogger(__name__)


# ==========================================
# FEATURES
# ==========================================

def covariance_from_reference(reference: Dataset, noise_level: NoiseLevel, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Column means of the unmodified reference, and the sample covariance of the (noised) reference."""
    require_trainable(reference)
    X = np.array(reference.X, dtype=float)
    mean = X.mean(axis=0)
    k = NoiseLevel(noise_level).multiplier
    if k > 0:
        sigma = float(np.min(X.std(axis=0, ddof=1)))
        X = X + np.random.default_rng(seed).normal(0.0, k * sigma, size=X.shape)
    cov = np.atleast_2d(np.cov(X, rowvar=False))
    return mean, cov


def sample_features(mean: np.ndarray, covariance: np.ndarray, n: int, seed: int) -> np.ndarray:
    """
    n draws from N(mean, covariance).

    Uses the symmetric eigendecomposition with negative eigenvalues clipped to
    zero, so rank-deficient and slightly indefinite sample covariances are
    accepted; the draws then follow the clipped covariance.
    """
    mean = np.asarray(mean, dtype=float).reshape(-1)
    cov = np.atleast_2d(np.asarray(covariance, dtype=float))
    p = mean.shape[0]
    if cov.shape != (p, p):
        raise ContractViolation(f"covariance must be {p}x{p}, got {cov.shape[0]}x{cov.shape[1]}")
    if n < 0:
        raise ContractViolation("n must be nonnegative")
    scale = max(1.0, float(np.max(np.abs(cov)))) if cov.size else 1.0
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-10 * scale):
        raise ContractViolation("covariance matrix is not symmetric")

    eigvals, eigvecs = np.linalg.eigh((cov + cov.T) / 2.0)
    clipped = np.clip(eigvals, 0.0, None)
    if np.any(eigvals < 0):
        logger.debug(kv("eigenvalues_clipped", count=int(np.sum(eigvals < 0)), smallest=f"{eigvals.min():.3g}"))
    factor = eigvecs * np.sqrt(clipped)
    z = np.random.default_rng(seed).standard_normal((n, p))
    return mean + z @ factor.T


# ==========================================
# RESPONSES
# ==========================================

class ResponseRecipe(BaseModel):
    """Everything needed to regenerate (or check) a synthetic response from its features."""
    model_config = ConfigDict(frozen=True)

    design: Design
    signal_indices: tuple[int, ...]
    # one coefficient set for linear, (beta_1, beta_2) for mixture
    coefficients: tuple[tuple[float, ...], ...]
    scale: float
    reference_range: tuple[float, float]
    noise_sd: float = 1.0
    median_threshold: Optional[float] = None
    noise: tuple[float, ...] = ()


def _draw_signals(rng: np.random.Generator, D: int, n_signals: int, signals) -> np.ndarray:
    if signals is not None:
        signals = np.asarray(signals, dtype=int)
        if signals.size == 0 or signals.min() < 0 or signals.max() >= D or len(set(signals.tolist())) != signals.size:
            raise ContractViolation("signal indices must be distinct column indices")
        return signals
    if not 1 <= n_signals <= D:
        raise ContractViolation(f"need 1 <= n_signals <= D, got n_signals={n_signals}, D={D}")
    return rng.choice(D, size=n_signals, replace=False)


def _draw_beta(rng: np.random.Generator, size: int, given) -> np.ndarray:
    if given is None:
        return rng.uniform(0.0, 1.0, size=size)
    beta = np.asarray(given, dtype=float).reshape(-1)
    if beta.size != size:
        raise ContractViolation(f"expected {size} coefficients, got {beta.size}")
    return beta


def _rescale(y_init: np.ndarray, reference_range: tuple[float, float]) -> tuple[np.ndarray, float]:
    """Maps y_init affinely onto the reference range; a = 0 when y_init is constant."""
    lo, hi = reference_range
    spread = float(y_init.max() - y_init.min())
    a = (hi - lo) / spread if spread > 0 else 0.0
    return lo + a * (y_init - y_init.min()), a


def linear_response(
    X: np.ndarray,
    reference_range: tuple[float, float],
    seed: int,
    *,
    n_signals: int = 10,
    signals: Optional[np.ndarray] = None,
    coefficients: Optional[np.ndarray] = None,
    noise_sd: float = 1.0,
) -> tuple[np.ndarray, ResponseRecipe]:
    """y = min(y_ref) + a * (y_init - min(y_init)) + eps with y_init = sum_j beta_j x_{k_j}."""
    X = np.asarray(X, dtype=float)
    rng = np.random.default_rng(seed)
    k = _draw_signals(rng, X.shape[1], n_signals, signals)
    beta = _draw_beta(rng, k.size, coefficients)
    y_init = X[:, k] @ beta
    y, a = _rescale(y_init, reference_range)
    eps = rng.standard_normal(X.shape[0]) * noise_sd
    recipe = ResponseRecipe(
        design=Design.LINEAR, signal_indices=tuple(int(j) for j in k),
        coefficients=(tuple(float(b) for b in beta),), scale=a,
        reference_range=tuple(float(v) for v in reference_range), noise_sd=noise_sd,
        noise=tuple(float(e) for e in eps),
    )
    return y + eps, recipe


def mixture_response(
    X: np.ndarray,
    reference_range: tuple[float, float],
    seed: int,
    *,
    n_signals: int = 10,
    signals: Optional[np.ndarray] = None,
    coefficients: Optional[tuple[np.ndarray, np.ndarray]] = None,
    noise_sd: float = 1.0,
) -> tuple[np.ndarray, ResponseRecipe]:
    """
    Two-regime version of `linear_response`.

    Row i uses beta_1 when x_{i,k_1} < median(x_{k_1}) and beta_2 otherwise,
    so rows at the median go to the second regime.
    """
    X = np.asarray(X, dtype=float)
    rng = np.random.default_rng(seed)
    k = _draw_signals(rng, X.shape[1], n_signals, signals)
    given_1, given_2 = coefficients if coefficients is not None else (None, None)
    beta_1 = _draw_beta(rng, k.size, given_1)
    beta_2 = _draw_beta(rng, k.size, given_2)
    first = X[:, k[0]]
    threshold = float(np.median(first))
    second_regime = first >= threshold
    y_init = np.where(second_regime, X[:, k] @ beta_2, X[:, k] @ beta_1)
    y, a = _rescale(y_init, reference_range)
    eps = rng.standard_normal(X.shape[0]) * noise_sd
    recipe = ResponseRecipe(
        design=Design.MIXTURE, signal_indices=tuple(int(j) for j in k),
        coefficients=(tuple(float(b) for b in beta_1), tuple(float(b) for b in beta_2)), scale=a,
        reference_range=tuple(float(v) for v in reference_range), noise_sd=noise_sd,
        median_threshold=threshold, noise=tuple(float(e) for e in eps),
    )
    return y + eps, recipe


# ==========================================
# REPLICATES
# ==========================================

class SimulationConfig(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    reference: Dataset
    noise_level: NoiseLevel = NoiseLevel.NONE
    n_signals: Annotated[int, Field(ge=1)] = 10
    response_kind: Design = Design.LINEAR
    n_replicates: Annotated[int, Field(ge=1)] = 1
    n_samples: Optional[Annotated[int, Field(ge=2)]] = None
    noise_sd: Annotated[float, Field(ge=0)] = 1.0
    seed: Annotated[int, Field(ge=0, lt=2**64)] = 0

    @model_validator(mode="after")
    def _signals_fit(self) -> "SimulationConfig":
        if self.n_signals > self.reference.D:
            raise ValueError(f"n_signals={self.n_signals} exceeds the reference's {self.reference.D} features")
        return self

    @property
    def n(self) -> int:
        return self.n_samples or self.reference.n


def generate_replicates(config: SimulationConfig, threads: int = 1) -> list[tuple[Dataset, ResponseRecipe]]:
    """
    Replicate datasets for one design and noise level.

    Sigma is computed once per configuration; replicate r draws its
    features and its response from seeds derived from (seed, r).
    """
    ref = config.reference
    mean, cov = covariance_from_reference(ref, config.noise_level, derive_seed(config.seed, "covariance"))
    reference_range = (float(ref.y.min()), float(ref.y.max()))
    respond = linear_response if config.response_kind == Design.LINEAR else mixture_response
    kinds = tuple(FeatureKind.CONTINUOUS for _ in range(ref.D))

    def replicate(r: int) -> tuple[Dataset, ResponseRecipe]:
        X = sample_features(mean, cov, config.n, derive_seed(config.seed, "replicate", r, "features"))
        y, recipe = respond(
            X, reference_range, derive_seed(config.seed, "replicate", r, "response"),
            n_signals=config.n_signals, noise_sd=config.noise_sd,
        )
        name = f"{ref.name}-{config.response_kind.value}-{config.noise_level.value}-r{r + 1}"
        return Dataset(y=y, X=X, feature_names=ref.feature_names, feature_kinds=kinds, name=name), recipe

    replicates = map_ordered(replicate, range(config.n_replicates), threads)
    logger.info(kv("simulated", replicates=len(replicates), design=config.response_kind.value, noise=config.noise_level.value))
    return replicates
