"""Ground-truth population models, samplers, and experiment runners.

Sampling uses the linear model x = mu + L y with L L' = Sigma and y an
iid vector (standard normal, or rescaled by a per-observation
chi-square draw for the multivariate t with its scale-matrix
convention, Cov = Sigma * nu/(nu-2)).

Determinism: every (replicate, class) pair owns an independent
counter-based random stream derived from (seed, p-index, replicate,
role), so results are bit-identical regardless of how replicates are
scheduled across worker threads.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import __version__
from .classifier import UClassifier
from .data import LabeledDataset, ValidationError
from .error_rates import NumericalError, estimated_error, theoretical_error, theoretical_moments
from .estimators import estimate_moments
from .ustat import build_gram


def sig10(x: float) -> float:
    """Round to 10 significant digits (stable textual output)."""
    return float(f"{float(x):.10g}")


# ---------------------------------------------------------------------------
# Covariance models and populations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CovarianceModel:
    """A p x p covariance with a cached lower-triangular factor."""

    kind: str
    p: int
    sigma_sq: float = 1.0
    rho: float = 0.0
    matrix: np.ndarray | None = field(default=None, repr=False)
    ridge: float = 0.0

    def realize(self) -> np.ndarray:
        if self.kind == "ar1":
            idx = np.arange(self.p)
            lag = np.abs(np.subtract.outer(idx, idx))
            return self.sigma_sq * self.rho**lag if self.rho != 0.0 else self.sigma_sq * np.eye(self.p)
        if self.matrix is None:
            raise ValidationError(f"covariance model '{self.kind}' has no matrix")
        return self.matrix

    def factor(self) -> np.ndarray:
        """Lower-triangular L with L L' equal to the realized matrix.

        AR(1) admits a closed form: column 0 is sigma*rho^k, column
        j >= 1 is sigma*sqrt(1-rho^2)*rho^(k-j) for k >= j.
        """
        if self.kind == "ar1":
            s = math.sqrt(self.sigma_sq)
            idx = np.arange(self.p)
            lag = np.subtract.outer(idx, idx)
            L = np.where(lag >= 0, self.rho ** np.maximum(lag, 0), 0.0)
            L[:, 1:] *= math.sqrt(1.0 - self.rho**2)
            return s * L
        try:
            return np.linalg.cholesky(self.realize())
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"covariance model '{self.kind}' is not positive definite") from exc


def build_ar1(p: int, sigma_sq: float, rho: float) -> CovarianceModel:
    """AR(1) covariance, entries sigma_sq * rho^|k-l|."""
    if p < 1:
        raise ValidationError(f"dimension must be >= 1, got {p}")
    if not abs(rho) < 1.0:
        raise ValidationError(f"AR(1) correlation must satisfy |rho| < 1, got {rho}")
    if not sigma_sq > 0.0:
        raise ValidationError(f"AR(1) variance must be positive, got {sigma_sq}")
    return CovarianceModel(kind="ar1", p=p, sigma_sq=sigma_sq, rho=rho)


def build_unstructured(p: int) -> CovarianceModel:
    """Unstructured covariance: variances 1..p, correlation (m-1)/p.

    The published rule is asymmetric in (i, j); it is symmetrized via
    m = min(i, j) and read as a correlation. If the factorization
    fails, one diagonal ridge of 1e-8 * max variance is added and
    recorded on the model.
    """
    if p < 2:
        raise ValidationError(f"unstructured covariance needs p >= 2, got {p}")
    var = np.arange(1, p + 1, dtype=np.float64)
    sd = np.sqrt(var)
    m = np.minimum.outer(np.arange(1, p + 1), np.arange(1, p + 1))
    S = ((m - 1) / p) * np.outer(sd, sd)
    np.fill_diagonal(S, var)
    ridge = 0.0
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        ridge = 1e-8 * float(var.max())
        S = S + ridge * np.eye(p)
        try:
            np.linalg.cholesky(S)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("unstructured covariance not positive definite after ridge") from exc
    S.setflags(write=False)
    return CovarianceModel(kind="unstructured", p=p, matrix=S, ridge=ridge)


def build_explicit(matrix) -> CovarianceModel:
    S = np.asarray(matrix, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValidationError("explicit covariance must be a square matrix")
    S = S.copy()
    S.setflags(write=False)
    model = CovarianceModel(kind="explicit", p=S.shape[0], matrix=S)
    model.factor()  # SPD check
    return model


def build_mean_pattern(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Zero mean vs the sparse shift: first floor(p/3) zeros, then ones."""
    if p < 1:
        raise ValidationError(f"dimension must be >= 1, got {p}")
    mu2 = np.ones(p)
    mu2[: p // 3] = 0.0
    return np.zeros(p), mu2


@dataclass
class PopulationSpec:
    """A sampling population: mean, covariance model, and family."""

    mu: np.ndarray
    cov: CovarianceModel
    family: str = "normal"
    nu: float | None = None

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64).ravel()
        if self.mu.shape[0] != self.cov.p:
            raise ValidationError(
                f"mean has dimension {self.mu.shape[0]}, covariance has p={self.cov.p}"
            )
        if self.family not in ("normal", "student_t"):
            raise ValidationError(f"unknown family '{self.family}'")
        if self.family == "student_t":
            if self.nu is None or not self.nu > 2:
                raise ValidationError("student_t family needs degrees of freedom nu > 2")
        self._factor = self.cov.factor()

    @property
    def factor(self) -> np.ndarray:
        return self._factor

    def true_cov(self) -> np.ndarray:
        """Covariance of a draw (scale matrix inflated by nu/(nu-2) for t)."""
        S = self.cov.realize()
        if self.family == "student_t":
            return S * (self.nu / (self.nu - 2.0))
        return S

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        y = rng.standard_normal((n, self.cov.p))
        z = y @ self._factor.T
        if self.family == "student_t":
            w = rng.chisquare(self.nu, size=n)
            z = z * np.sqrt(self.nu / w)[:, None]
        return self.mu + z


def sample(spec: PopulationSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    return spec.sample(n, rng)


def stream(seed: int, *indices: int) -> np.random.Generator:
    """Independent deterministic substream for a tuple of indices."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, *indices))))


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PopulationTemplate:
    """Per-class population recipe, materialized for each p in the grid."""

    family: str = "normal"
    nu: float | None = None
    cov_kind: str = "ar1"
    sigma_sq: float = 1.0
    rho: float = 0.0
    matrix: tuple | None = None

    def build_cov(self, p: int) -> CovarianceModel:
        if self.cov_kind == "ar1":
            return build_ar1(p, self.sigma_sq, self.rho)
        if self.cov_kind == "unstructured":
            return build_unstructured(p)
        if self.cov_kind == "explicit":
            if self.matrix is None:
                raise ValidationError("explicit covariance template needs a matrix")
            model = build_explicit(self.matrix)
            if model.p != p:
                raise ValidationError(
                    f"explicit covariance has p={model.p}, grid asks for p={p}"
                )
            return model
        raise ValidationError(f"unknown covariance kind '{self.cov_kind}'")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full recipe for one reproducible experiment."""

    mode: str
    pop1: PopulationTemplate
    pop2: PopulationTemplate
    n1: int
    n2: int
    p_grid: tuple[int, ...]
    replicates: int
    seed: int
    means: str = "pattern"
    mu1: tuple | None = None
    mu2: tuple | None = None

    def __post_init__(self):
        if self.mode not in ("normality", "error_curve"):
            raise ValidationError(f"mode must be 'normality' or 'error_curve', got '{self.mode}'")
        if self.n1 < 2 or self.n2 < 2:
            raise ValidationError("experiments need n1, n2 >= 2")
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if not self.p_grid or list(self.p_grid) != sorted(set(self.p_grid)):
            raise ValidationError("p_grid must be a nonempty ascending list")
        if self.means not in ("pattern", "explicit"):
            raise ValidationError("means must be 'pattern' or 'explicit'")
        if self.means == "explicit" and (self.mu1 is None or self.mu2 is None):
            raise ValidationError("explicit means need mu1 and mu2")

    def populations(self, p: int) -> tuple[PopulationSpec, PopulationSpec]:
        if self.means == "pattern":
            mu1, mu2 = build_mean_pattern(p)
        else:
            mu1 = np.asarray(self.mu1, dtype=np.float64)
            mu2 = np.asarray(self.mu2, dtype=np.float64)
            if mu1.shape[0] != p or mu2.shape[0] != p:
                raise ValidationError(f"explicit means must have length p={p}")
        spec1 = PopulationSpec(mu1, self.pop1.build_cov(p), self.pop1.family, self.pop1.nu)
        spec2 = PopulationSpec(mu2, self.pop2.build_cov(p), self.pop2.family, self.pop2.nu)
        return spec1, spec2


def _template_from_dict(doc: dict, path: str) -> PopulationTemplate:
    cov = doc.get("cov", {})
    family = doc.get("family", {})
    try:
        return PopulationTemplate(
            family=family.get("kind", "normal"),
            nu=family.get("nu"),
            cov_kind=cov.get("kind", "ar1"),
            sigma_sq=float(cov.get("sigma_sq", 1.0)),
            rho=float(cov.get("rho", 0.0)),
            matrix=tuple(map(tuple, cov["matrix"])) if "matrix" in cov else None,
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"invalid population spec at '{path}': {exc}") from exc


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build a validated config from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    version = doc.get("schema_version")
    if version != 1:
        raise ValidationError(f"unsupported schema_version {version!r} (expected 1)")
    required = ["mode", "n1", "n2", "p_grid", "replicates", "seed"]
    for key in required:
        if key not in doc:
            raise ValidationError(f"config missing field '{key}'")
    means = doc.get("means", {"kind": "pattern"})
    try:
        return ExperimentConfig(
            mode=str(doc["mode"]),
            pop1=_template_from_dict(doc.get("pop1", {}), "pop1"),
            pop2=_template_from_dict(doc.get("pop2", {}), "pop2"),
            n1=int(doc["n1"]),
            n2=int(doc["n2"]),
            p_grid=tuple(int(p) for p in doc["p_grid"]),
            replicates=int(doc["replicates"]),
            seed=int(doc["seed"]),
            means=means.get("kind", "pattern"),
            mu1=tuple(means["mu1"]) if "mu1" in means else None,
            mu2=tuple(means["mu2"]) if "mu2" in means else None,
        )
    except (TypeError, ValueError, KeyError) as exc:
        raise ValidationError(f"invalid config value: {exc}") from exc


# ---------------------------------------------------------------------------
# Statistics helpers
# ---------------------------------------------------------------------------


def ks_statistic(values, cdf=ndtr) -> float:
    """Kolmogorov-Smirnov distance of a sample to a reference cdf."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    m = x.shape[0]
    if m == 0:
        raise ValidationError("KS statistic needs a nonempty sample")
    F = np.asarray(cdf(x))
    above = np.max(np.arange(1, m + 1) / m - F)
    below = np.max(F - np.arange(m) / m)
    return float(max(above, below))


def histogram_fd(values) -> dict:
    """Freedman-Diaconis histogram, emitted as plain data."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise ValidationError("histogram needs a nonempty sample")
    if np.ptp(x) == 0.0:
        edges = np.array([x[0] - 0.5, x[0] + 0.5])
    else:
        edges = np.histogram_bin_edges(x, bins="fd")
    counts, edges = np.histogram(x, bins=edges)
    return {
        "bin_edges": [sig10(e) for e in edges],
        "counts": [int(c) for c in counts],
    }


# ---------------------------------------------------------------------------
# Experiment runners
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentResult:
    """Per-p records of one experiment plus the config echo."""

    mode: str
    seed: int
    n1: int
    n2: int
    replicates: int
    records: tuple[dict, ...]

    def to_json(self) -> str:
        doc = {
            "schema_version": 1,
            "package_version": __version__,
            "mode": self.mode,
            "seed": self.seed,
            "n1": self.n1,
            "n2": self.n2,
            "replicates": self.replicates,
            "records": list(self.records),
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        lines = []
        if self.mode == "normality":
            lines.append("p,replicate,score_raw,score_standardized,score_estimator_standardized")
            for rec in self.records:
                for r, (raw, std, est) in enumerate(
                    zip(rec["scores_raw"], rec["standardized_scores"], rec["estimator_standardized_scores"])
                ):
                    lines.append(f"{rec['p']},{r},{raw:.10g},{std:.10g},{est:.10g}")
        else:
            lines.append("p,theoretical_rate,estimated_rate_mean,estimated_rate_se")
            for rec in self.records:
                lines.append(
                    f"{rec['p']},{rec['theoretical_rate']:.10g},"
                    f"{rec['estimated_rate_mean']:.10g},{rec['estimated_rate_se']:.10g}"
                )
        return "\n".join(lines) + "\n"


def _map_ordered(fn, items, threads: int):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _one_normality_rep(args):
    config, p_idx, spec1, spec2, rep = args
    X1 = spec1.sample(config.n1, stream(config.seed, p_idx, rep, 0))
    X2 = spec2.sample(config.n2, stream(config.seed, p_idx, rep, 1))
    x0 = spec1.sample(1, stream(config.seed, p_idx, rep, 2))[0]
    ds = LabeledDataset(("1", "2"), (X1, X2))
    gram = build_gram(ds)
    model = UClassifier.from_dataset(ds, gram)
    est = estimate_moments(gram, 0, 1)
    raw = model.score_pair("1", "2", x0)
    std_est = model.standardized_score(est, "1", "2", x0)
    return raw, float(std_est)


def run_normality_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Distribution-shape study of the raw pairwise score.

    Per replicate: draw both samples and one extra observation from
    class 1, fit, and record the raw score and its plug-in standardized
    version. The reported ks_statistic measures the distance of the
    sample-standardized raw scores to the standard normal (the shape of
    the score distribution); the KS of the plug-in standardized scores
    is reported alongside.
    """
    if config.mode != "normality":
        raise ValidationError(f"config mode is '{config.mode}', expected 'normality'")
    if config.n1 < 4 or config.n2 < 4:
        raise ValidationError("normality experiment needs n >= 4 per class for moment estimates")
    records = []
    for p_idx, p in enumerate(config.p_grid):
        spec1, spec2 = config.populations(p)
        rows = _map_ordered(
            _one_normality_rep,
            [(config, p_idx, spec1, spec2, rep) for rep in range(config.replicates)],
            threads,
        )
        raw = np.asarray([r[0] for r in rows])
        est_std = np.asarray([r[1] for r in rows])
        if raw.size >= 2 and raw.std(ddof=1) > 0.0:
            shape_std = (raw - raw.mean()) / raw.std(ddof=1)
        else:
            shape_std = raw - raw.mean()
        record = {
            "p": p,
            "ks_statistic": sig10(ks_statistic(shape_std)),
            "ks_statistic_estimator_standardized": sig10(ks_statistic(est_std)),
            "scores_raw": [sig10(v) for v in raw],
            "standardized_scores": [sig10(v) for v in shape_std],
            "estimator_standardized_scores": [sig10(v) for v in est_std],
            "histogram": histogram_fd(raw),
        }
        records.append(record)
    return ExperimentResult(
        mode="normality",
        seed=config.seed,
        n1=config.n1,
        n2=config.n2,
        replicates=config.replicates,
        records=tuple(records),
    )


def _one_error_rep(args):
    config, p_idx, spec1, spec2, rep = args
    X1 = spec1.sample(config.n1, stream(config.seed, p_idx, rep, 0))
    X2 = spec2.sample(config.n2, stream(config.seed, p_idx, rep, 1))
    ds = LabeledDataset(("1", "2"), (X1, X2))
    est = estimate_moments(build_gram(ds), 0, 1)
    return estimated_error(est).rate_total


def run_error_curve_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Theoretical vs estimated misclassification rate across the p grid."""
    if config.mode != "error_curve":
        raise ValidationError(f"config mode is '{config.mode}', expected 'error_curve'")
    if config.n1 < 4 or config.n2 < 4:
        raise ValidationError("error-curve experiment needs n >= 4 per class for moment estimates")
    records = []
    for p_idx, p in enumerate(config.p_grid):
        spec1, spec2 = config.populations(p)
        tm = theoretical_moments(
            spec1.mu, spec2.mu, spec1.true_cov(), spec2.true_cov(), config.n1, config.n2
        )
        theo = theoretical_error(tm).rate_total
        rates = np.asarray(
            _map_ordered(
                _one_error_rep,
                [(config, p_idx, spec1, spec2, rep) for rep in range(config.replicates)],
                threads,
            )
        )
        se = float(rates.std(ddof=1) / math.sqrt(rates.size)) if rates.size > 1 else 0.0
        records.append(
            {
                "p": p,
                "theoretical_rate": sig10(theo),
                "estimated_rate_mean": sig10(float(rates.mean())),
                "estimated_rate_se": sig10(se),
            }
        )
    return ExperimentResult(
        mode="error_curve",
        seed=config.seed,
        n1=config.n1,
        n2=config.n2,
        replicates=config.replicates,
        records=tuple(records),
    )
