"""Monte Carlo campaigns comparing the localization estimators against the CRLB.

Every (trial, sigma) pair owns an independent random stream derived from
``(seed, trial_index, sigma_index)``, so trials may be evaluated in any order
and all estimators see the same noise realization.
"""

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .differencing import (
    LARGEST_MAGNITUDE,
    ReferencePolicy,
    build_plan,
    differential_estimate,
    differential_estimate_unwhitened,
)
from .estimators import joint_ls, osp_estimate_type2
from .exceptions import EmptyInput, NuisanceError
from .localization import (
    FIG_ANCHORS,
    SD_RSS,
    SD_TDOA,
    SD_TOA,
    TSE_TOA,
    LocScene,
    build_sd_rss,
    build_sd_tdoa,
    build_sd_toa,
    crlb_rss,
    crlb_toa,
    ranges,
    ranges_from,
    simulate_rss,
    simulate_toa,
    tse_iterate,
)

# tag -> (model label, method, whitened model?)
ROSTER = {
    "J-BLUE-TSE-TOA": (TSE_TOA, "joint", True),
    "OSP-BLUE-TSE-TOA": (TSE_TOA, "osp", True),
    "D-BLUE-TSE-TOA": (TSE_TOA, "diff", True),
    "D-LS-TSE-TOA": (TSE_TOA, "diff_ls", True),
    "J-LS-SD-TOA": (SD_TOA, "joint", False),
    "J-BLUE-SD-TOA": (SD_TOA, "joint", True),
    "OSP-BLUE-SD-TOA": (SD_TOA, "osp", True),
    "D-BLUE-SD-TOA": (SD_TOA, "diff", True),
    "J-LS-SD-TDOA": (SD_TDOA, "joint", False),
    "J-BLUE-SD-TDOA": (SD_TDOA, "joint", True),
    "OSP-BLUE-SD-TDOA": (SD_TDOA, "osp", True),
    "D-BLUE-SD-TDOA": (SD_TDOA, "diff", True),
    "J-LS-SD-RSS": (SD_RSS, "joint", False),
    "J-BLUE-SD-RSS": (SD_RSS, "joint", True),
    "OSP-BLUE-SD-RSS": (SD_RSS, "osp", True),
    "D-LS-SD-RSS": (SD_RSS, "diff_ls", True),
    "D-BLUE-SD-RSS": (SD_RSS, "diff", True),
}
TIME_TAGS = tuple(t for t, v in ROSTER.items() if v[0] != SD_RSS)
RSS_TAGS = tuple(t for t, v in ROSTER.items() if v[0] == SD_RSS)
TIME_MODELS = (TSE_TOA, SD_TOA, SD_TDOA)

CSV_HEADER = "model,estimator,sigma,rmse,crlb_rmse,trials,excluded,seed"


def default_sigma_grid(lo_exp, hi_exp, num=10):
    return tuple(float(v) for v in np.logspace(lo_exp, hi_exp, num))


@dataclass(frozen=True)
class CampaignConfig:
    """Everything that determines a campaign's output.

    ``target=None`` places the target uniformly at random in
    ``[0, field_size]^d``, redrawn per trial (``target_redraw="trial"``) or
    once for the whole campaign (``"campaign"``). ``whitening="true"`` builds
    the SD whiteners from the true ranges; ``"estimate"`` uses ranges from
    the plain SD-TDOA least-squares position instead.
    """

    anchors: tuple = tuple(map(tuple, FIG_ANCHORS))
    target: tuple = None
    field_size: float = 50.0
    target_redraw: str = "trial"
    r0: float = 10.0
    P0: float = 10.0
    gamma: float = 2.0
    sigma_grid: tuple = default_sigma_grid(-2, 1)
    trials: int = 1000
    seed: int = 0
    models: tuple = TIME_MODELS
    estimators: tuple = TIME_TAGS
    tse_iterations: int = 1
    tdoa_ref: int = 0
    whitening: str = "true"
    diff_reference: str = LARGEST_MAGNITUDE

    def __post_init__(self):
        object.__setattr__(self, "anchors", tuple(tuple(float(c) for c in a) for a in self.anchors))
        if self.target is not None:
            object.__setattr__(self, "target", tuple(float(c) for c in self.target))
        object.__setattr__(self, "sigma_grid", tuple(float(s) for s in self.sigma_grid))
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.sigma_grid or any(not s > 0 for s in self.sigma_grid):
            raise ValueError("sigma_grid must be non-empty and strictly positive")
        for tag in self.estimators:
            if tag not in ROSTER:
                raise ValueError(f"unknown estimator tag {tag!r}")
        for m in self.models:
            if m not in (TSE_TOA, SD_TOA, SD_TDOA, SD_RSS):
                raise ValueError(f"unknown model label {m!r}")
        if self.target_redraw not in ("trial", "campaign"):
            raise ValueError("target_redraw must be 'trial' or 'campaign'")
        if self.whitening not in ("true", "estimate"):
            raise ValueError("whitening must be 'true' or 'estimate'")
        if self.tse_iterations < 1:
            raise ValueError("tse_iterations must be >= 1")
        ReferencePolicy(self.diff_reference)

    @property
    def active_tags(self):
        return tuple(t for t in self.estimators if ROSTER[t][0] in self.models)

    def scene(self, target):
        return LocScene(np.array(self.anchors), target, self.r0, self.P0, self.gamma, 1.0)


@dataclass(frozen=True)
class CampaignRow:
    model: str
    estimator: str
    sigma: float
    rmse: float
    crlb_rmse: float
    trials: int
    excluded: int
    seed: int

    def csv(self):
        g = lambda v: format(v, ".12g")  # noqa: E731
        return (
            f"{self.model},{self.estimator},{g(self.sigma)},{g(self.rmse)},"
            f"{g(self.crlb_rmse)},{self.trials},{self.excluded},{self.seed}"
        )


@dataclass
class CampaignResult:
    rows: list = field(default_factory=list)

    def to_csv(self):
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for row in self.rows:
            buf.write(row.csv() + "\n")
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    def select(self, estimator):
        return [r for r in self.rows if r.estimator == estimator]

    def rmse_curve(self, estimator):
        return np.array([r.rmse for r in self.select(estimator)])

    def crlb_curve(self, estimator):
        return np.array([r.crlb_rmse for r in self.select(estimator)])


def rmse(errors):
    """Root of the mean of squared errors, summed exactly in the given order."""
    errors = list(errors)
    if not errors:
        raise EmptyInput("rmse of an empty error list")
    return math.sqrt(math.fsum(errors) / len(errors))


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def draw_target(config, trial_index):
    if config.target is not None:
        return np.array(config.target)
    key = (0, trial_index) if config.target_redraw == "trial" else (0,)
    dim = len(config.anchors[0])
    return _rng(config.seed, *key).uniform(0.0, config.field_size, dim)


def _estimate(model, method, policy):
    if method == "joint":
        return joint_ls(model).x_hat
    if method == "osp":
        return osp_estimate_type2(model).x_hat
    plan = build_plan(model, policy)
    if method == "diff":
        return differential_estimate(model, plan).x_hat
    return differential_estimate_unwhitened(model, plan).x_hat


def _guard(fn):
    try:
        return fn()
    except (NuisanceError, np.linalg.LinAlgError, ValueError, FloatingPointError):
        return None


def _time_estimates(config, scene, d, tags, policy):
    anchors = scene.anchors
    out = {}
    ls_tdoa = _guard(lambda: build_sd_tdoa(d, anchors, config.tdoa_ref, whiten=False))
    x0 = None if ls_tdoa is None else _guard(lambda: ls_tdoa.extract_x(joint_ls(ls_tdoa.model).x_hat))
    if config.whitening == "true":
        w = ranges(scene)
    else:
        w = None if x0 is None else ranges_from(anchors, x0)

    built = {}

    def get(label, whitened):
        if (label, whitened) not in built:
            if label == SD_TOA:
                fn = lambda: build_sd_toa(d, anchors, w, whiten=whitened)  # noqa: E731
            else:
                fn = lambda: build_sd_tdoa(d, anchors, config.tdoa_ref, w, whiten=whitened)  # noqa: E731
            built[(label, whitened)] = None if (whitened and w is None) else _guard(fn)
        return built[(label, whitened)]

    for tag in tags:
        label, method, whitened = ROSTER[tag]
        if label == TSE_TOA:
            if x0 is None:
                out[tag] = None
                continue
            est = lambda m, method=method: _estimate(m, method, policy)  # noqa: E731
            xs = _guard(lambda: tse_iterate(d, anchors, x0, est, config.tse_iterations))
            out[tag] = None if xs is None else xs[-1]
        else:
            b = get(label, whitened)
            out[tag] = None if b is None else _guard(
                lambda: b.extract_x(_estimate(b.model, method, policy))
            )
    return out


def _rss_estimates(config, scene, P, tags, policy):
    out = {}
    built = {}
    for tag in tags:
        _, method, whitened = ROSTER[tag]
        if whitened not in built:
            built[whitened] = _guard(
                lambda: build_sd_rss(P, scene.anchors, scene.gamma, scene.sigma, scene.P0, whitened)
            )
        b = built[whitened]
        out[tag] = None if b is None else _guard(lambda: b.extract_x(_estimate(b.model, method, policy)))
    return out


@dataclass
class TrialResult:
    trial_index: int
    target: np.ndarray
    errors: dict  # (tag, sigma_index) -> squared error or nan
    crlb_unit: dict  # "toa" / "rss" -> position CRLB trace at sigma = 1, or nan


def run_trial(config, trial_index):
    """Squared position errors of every active estimator at every sigma."""
    target = draw_target(config, trial_index)
    tags = config.active_tags
    time_tags = [t for t in tags if ROSTER[t][0] != SD_RSS]
    rss_tags = [t for t in tags if ROSTER[t][0] == SD_RSS]
    policy = ReferencePolicy(config.diff_reference)
    errors = {}
    crlb_unit = {"toa": math.nan, "rss": math.nan}
    try:
        scene = config.scene(target)
    except (NuisanceError, ValueError):
        for t in tags:
            for s in range(len(config.sigma_grid)):
                errors[(t, s)] = math.nan
        return TrialResult(trial_index, target, errors, crlb_unit)

    crlb_unit["toa"] = _guard(lambda: crlb_toa(scene)) or math.nan
    crlb_unit["rss"] = _guard(lambda: crlb_rss(scene)) or math.nan
    for s_idx, sigma in enumerate(config.sigma_grid):
        sc = scene.with_sigma(sigma)
        rng = _rng(config.seed, 1, trial_index, s_idx)
        estimates = {}
        if time_tags:
            d = simulate_toa(sc, rng)
            estimates.update(_time_estimates(config, sc, d, time_tags, policy))
        if rss_tags:
            P = simulate_rss(sc, rng)
            estimates.update(_rss_estimates(config, sc, P, rss_tags, policy))
        for t in tags:
            x = estimates.get(t)
            if x is None or not np.all(np.isfinite(x)):
                errors[(t, s_idx)] = math.nan
            else:
                errors[(t, s_idx)] = float(np.sum((x - target) ** 2))
    return TrialResult(trial_index, target, errors, crlb_unit)


def run_campaign(config, trials=None):
    """Aggregate RMSE per (model, estimator, sigma); rows in deterministic order.

    ``trials`` may pass precomputed :class:`TrialResult` objects in any order.
    """
    if trials is None:
        trials = [run_trial(config, i) for i in range(config.trials)]
    trials = sorted(trials, key=lambda t: t.trial_index)
    result = CampaignResult()
    for label in config.models:
        bound_key = "rss" if label == SD_RSS else "toa"
        bounds = [t.crlb_unit[bound_key] for t in trials if np.isfinite(t.crlb_unit[bound_key])]
        mean_bound = math.fsum(bounds) / len(bounds) if bounds else math.nan
        for tag in config.active_tags:
            if ROSTER[tag][0] != label:
                continue
            for s_idx, sigma in enumerate(config.sigma_grid):
                errs = [t.errors[(tag, s_idx)] for t in trials]
                kept = [e for e in errs if np.isfinite(e)]
                value = rmse(kept) if kept else math.nan
                result.rows.append(
                    CampaignRow(
                        model=label,
                        estimator=tag,
                        sigma=sigma,
                        rmse=value,
                        crlb_rmse=sigma * math.sqrt(mean_bound),
                        trials=len(trials),
                        excluded=len(errs) - len(kept),
                        seed=config.seed,
                    )
                )
    return result


def fig2_config(**overrides):
    """Time-based experiment on the ten-anchor reference layout."""
    return CampaignConfig(**overrides)


def fig3_config(**overrides):
    """RSS experiment on the ten-anchor reference layout (P0 = 10 dBm, gamma = 2)."""
    base = dict(
        models=(SD_RSS,),
        estimators=RSS_TAGS,
        P0=10.0,
        gamma=2.0,
        sigma_grid=default_sigma_grid(-1, 0.75),
    )
    base.update(overrides)
    return CampaignConfig(**base)
