"""Time-based and RSS-based localization problems mapped onto the linear
nuisance model, plus measurement synthesis and Cramer-Rao bounds.

Builders return a :class:`BuiltLinearModel` whose ``model`` is already white
(unless ``whiten=False`` is requested to reproduce plain LS baselines).
Indices are 0-based; positions are in meters, RSS in dBm.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .differencing import single_ref_operator
from .exceptions import (
    ExpansionPointOnAnchor,
    NonPositiveGamma,
    NonPositiveRange,
    SingularFIM,
    TargetOnAnchor,
)
from .linmodel import LinearNuisanceModel
from .matkernel import inv_sqrt_sym, rank_of

LN10 = np.log(10.0)

TSE_TOA = "TSE_TOA"
SD_TOA = "SD_TOA"
SD_TDOA = "SD_TDOA"
SD_RSS = "SD_RSS"
LABELS = (TSE_TOA, SD_TOA, SD_TDOA, SD_RSS)

# Ten-anchor reference layout in a 50 m x 50 m field, used by both campaigns.
FIG_ANCHORS = np.array(
    [
        [50, 50], [50, 0], [0, 50], [0, 0], [25, 7],
        [25, 43], [12, 33], [12, 16], [37, 33], [37, 16],
    ],
    dtype=float,
)


@dataclass(frozen=True, eq=False)
class LocScene:
    anchors: np.ndarray
    target: np.ndarray
    r0: float = 0.0
    P0: float = 0.0
    gamma: float = 2.0
    sigma: float = 1.0

    def __post_init__(self):
        anchors = np.atleast_2d(np.asarray(self.anchors, dtype=float))
        target = np.asarray(self.target, dtype=float).reshape(-1)
        N, d = anchors.shape
        if d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {d}")
        if target.shape != (d,):
            raise ValueError(f"target must have {d} coordinates")
        if N < d + 3:
            raise ValueError(f"need at least {d + 3} anchors in {d}-D, got {N}")
        diff = anchors[:, None, :] - anchors[None, :, :]
        dist = np.linalg.norm(diff, axis=-1) + np.eye(N)
        if np.any(dist == 0):
            raise ValueError("anchor positions must be pairwise distinct")
        if np.any(np.linalg.norm(anchors - target, axis=1) == 0):
            raise TargetOnAnchor("target coincides with an anchor")
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "target", target)

    @property
    def dim(self):
        return self.anchors.shape[1]

    @property
    def N(self):
        return self.anchors.shape[0]

    def with_target(self, target):
        return replace(self, target=target)

    def with_sigma(self, sigma):
        return replace(self, sigma=float(sigma))


@dataclass(frozen=True, eq=False)
class BuiltLinearModel:
    model: LinearNuisanceModel
    label: str
    dim: int
    info: dict = field(default_factory=dict)

    def extract_x(self, x_hat):
        """Position estimate: the first ``dim`` entries of the linear estimate.

        Any structure linking the position to auxiliary unknowns such as
        ``||x||^2`` is deliberately not exploited.
        """
        return np.asarray(x_hat)[: self.dim]


def ranges_from(anchors, x):
    return np.linalg.norm(np.asarray(anchors, dtype=float) - np.asarray(x, dtype=float), axis=1)


def ranges(scene):
    r = ranges_from(scene.anchors, scene.target)
    if np.any(r <= 0):
        raise TargetOnAnchor("target coincides with an anchor")
    return r


def _noise(scene, rng):
    # a noiseless scene may omit the random source
    if rng is None:
        if scene.sigma != 0:
            raise ValueError("a random generator is required when sigma > 0")
        return np.zeros(scene.N)
    return scene.sigma * rng.standard_normal(scene.N)


def simulate_toa(scene, rng):
    """``d = r(x_t) + r0 + n`` with i.i.d. Gaussian noise of std ``sigma``."""
    return ranges(scene) + scene.r0 + _noise(scene, rng)


def simulate_rss(scene, rng):
    """Log-distance path loss with 1 m reference distance and Gaussian shadowing."""
    r = ranges(scene)
    return scene.P0 - 10.0 * scene.gamma * np.log10(r) + _noise(scene, rng)


def toa_mean(anchors, theta):
    """Noise-free TOA vector for ``theta = [x_t, r0]``."""
    theta = np.asarray(theta, dtype=float)
    return ranges_from(anchors, theta[:-1]) + theta[-1]


def toa_jacobian(anchors, x):
    anchors = np.asarray(anchors, dtype=float)
    diff = np.asarray(x, dtype=float) - anchors
    r = np.linalg.norm(diff, axis=1)
    if np.any(r == 0):
        raise TargetOnAnchor("target coincides with an anchor")
    return np.hstack([diff / r[:, None], np.ones((len(anchors), 1))])


def rss_mean(anchors, theta, gamma):
    """Noise-free RSS vector for ``theta = [x_t, P0]``."""
    theta = np.asarray(theta, dtype=float)
    return theta[-1] - 10.0 * gamma * np.log10(ranges_from(anchors, theta[:-1]))


def rss_jacobian(anchors, x, gamma):
    anchors = np.asarray(anchors, dtype=float)
    diff = np.asarray(x, dtype=float) - anchors
    r2 = np.sum(diff**2, axis=1)
    if np.any(r2 == 0):
        raise TargetOnAnchor("target coincides with an anchor")
    return np.hstack([-(10.0 * gamma / LN10) * diff / r2[:, None], np.ones((len(anchors), 1))])


def _position_crlb(J, sigma, d):
    if rank_of(J).rank < J.shape[1]:
        raise SingularFIM("Fisher information is singular for this geometry")
    fim = J.T @ J
    if np.linalg.cond(fim) > 1e12:
        raise SingularFIM("Fisher information is numerically singular")
    return float(sigma**2 * np.trace(np.linalg.inv(fim)[:d, :d]))


def crlb_toa(scene):
    """Trace of the position block of the CRLB with unknown ``r0`` (m^2)."""
    return _position_crlb(toa_jacobian(scene.anchors, scene.target), scene.sigma, scene.dim)


def crlb_rss(scene):
    """Trace of the position block of the CRLB with unknown ``P0`` (m^2)."""
    J = rss_jacobian(scene.anchors, scene.target, scene.gamma)
    return _position_crlb(J, scene.sigma, scene.dim)


def build_tse(d, anchors, x_prev, sigma=1.0):
    """Linearize the TOA model around ``x_prev``; the nuisance is ``r0``."""
    anchors = np.asarray(anchors, dtype=float)
    x_prev = np.asarray(x_prev, dtype=float)
    diff = x_prev - anchors
    r = np.linalg.norm(diff, axis=1)
    if np.any(r == 0):
        raise ExpansionPointOnAnchor("expansion point coincides with an anchor")
    Delta = diff / r[:, None]
    y = np.asarray(d, dtype=float) - r + Delta @ x_prev
    model = LinearNuisanceModel(y, Delta, np.ones((len(anchors), 1)), sigma)
    return BuiltLinearModel(model, TSE_TOA, anchors.shape[1], {"x_prev": x_prev})


def _check_ranges(w, n):
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape != (n,):
        raise ValueError(f"need {n} whitening ranges")
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise NonPositiveRange("whitening ranges must be strictly positive")
    return w


def sd_toa_system(d, anchors):
    """Unwhitened squared-distance TOA system ``z = A theta``.

    ``theta = [x_t, ||x_t||^2 - r0^2, r0]`` and the rows of ``A`` are
    ``[-2 s_i, 1, 2 d_i]``.
    """
    anchors = np.asarray(anchors, dtype=float)
    d = np.asarray(d, dtype=float)
    A = np.hstack([-2.0 * anchors, np.ones((len(d), 1)), 2.0 * d[:, None]])
    z = d**2 - np.sum(anchors**2, axis=1)
    return z, A


def build_sd_toa(d, anchors, whiten_ranges=None, sigma=1.0, whiten=True):
    """Squared-distance TOA model with nuisances ``[||x||^2 - r0^2, r0]``.

    Rows are divided by ``whiten_ranges`` (the anchor-target ranges), which
    turns the first-order noise ``2 r_i n_i`` into white noise of std
    ``2 sigma``.
    """
    anchors = np.asarray(anchors, dtype=float)
    dim = anchors.shape[1]
    z, A = sd_toa_system(d, anchors)
    if whiten:
        w = _check_ranges(whiten_ranges, len(z))
        z, A = z / w, A / w[:, None]
    model = LinearNuisanceModel(z, A[:, :dim], A[:, dim:], 2.0 * sigma)
    return BuiltLinearModel(model, SD_TOA, dim, {"whitened": whiten})


def sd_tdoa_system(d, anchors, ref_j=0):
    """Unwhitened squared-distance TDOA system with ``theta = [x_t, r_j]``."""
    anchors = np.asarray(anchors, dtype=float)
    d = np.asarray(d, dtype=float)
    N = len(d)
    Gj = single_ref_operator(N, ref_j)
    dij = Gj @ d
    others = [i for i in range(N) if i != ref_j]
    s_i = anchors[others]
    s_j = anchors[ref_j]
    A = -2.0 * np.hstack([s_i - s_j, dij[:, None]])
    z = dij**2 + s_j @ s_j - np.sum(s_i**2, axis=1)
    return z, A, Gj


def build_sd_tdoa(d, anchors, ref_j=0, whiten_ranges=None, sigma=1.0, whiten=True):
    """Squared-distance model of the TDOAs against anchor ``ref_j``.

    The single nuisance is the reference range ``r_j``. Whitening uses
    ``(D Gamma_j Gamma_j^T D)^{-1/2}`` with ``D = diag(r_i, i != j)``, so the
    first-order noise ``2 D Gamma_j n`` becomes white with std ``2 sigma``.
    """
    anchors = np.asarray(anchors, dtype=float)
    dim = anchors.shape[1]
    z, A, Gj = sd_tdoa_system(d, anchors, ref_j)
    info = {"whitened": whiten, "ref_j": ref_j, "Gamma_j": Gj}
    if whiten:
        w = _check_ranges(whiten_ranges, len(d))
        D = np.diag(np.delete(w, ref_j))
        W = inv_sqrt_sym(D @ Gj @ Gj.T @ D)
        z, A = W @ z, W @ A
        info["whitener"] = W
    model = LinearNuisanceModel(z, A[:, :dim], A[:, dim:], 2.0 * sigma)
    return BuiltLinearModel(model, SD_TDOA, dim, info)


def rss_linear_power(P, gamma):
    """``10^(P / (5 gamma))``, the power transform that linearizes RSS."""
    return 10.0 ** (np.asarray(P, dtype=float) / (5.0 * gamma))


def sd_rss_system(P, anchors, gamma):
    """Unwhitened SD-RSS system ``h = F phi`` with ``phi = [x_t, ||x_t||^2, P0']``."""
    if not gamma > 0:
        raise NonPositiveGamma("path-loss exponent must be positive")
    anchors = np.asarray(anchors, dtype=float)
    Pp = rss_linear_power(P, gamma)
    F = np.hstack([2.0 * anchors, -np.ones((len(Pp), 1)), (1.0 / Pp)[:, None]])
    h = np.sum(anchors**2, axis=1)
    return h, F, Pp


def build_sd_rss(P, anchors, gamma, sigma=1.0, P0=None, whiten=True):
    """Squared-distance RSS model; the nuisance is ``P0' = 10^(P0 / (5 gamma))``.

    Whitening scales row ``i`` by ``P_i'``, after which the nuisance column is
    all ones. When ``P0`` is given the model's ``sigma`` is set to the
    whitened noise std ``ln(10) P0' sigma / (5 gamma)``.
    """
    h, F, Pp = sd_rss_system(P, anchors, gamma)
    dim = np.asarray(anchors).shape[1]
    if whiten:
        h, F = Pp * h, Pp[:, None] * F
    scale = sigma if P0 is None else LN10 * rss_linear_power(P0, gamma) * sigma / (5.0 * gamma)
    model = LinearNuisanceModel(h, F[:, : dim + 1], F[:, dim + 1 :], scale)
    return BuiltLinearModel(model, SD_RSS, dim, {"whitened": whiten, "P_lin": Pp})


def nonlinear_toa_residual(d, anchors, x, r0):
    return float(np.sum((np.asarray(d) - toa_mean(anchors, np.append(x, r0))) ** 2))


def tse_iterate(d, anchors, x0, estimate, iterations=1, sigma=1.0):
    """Repeated Taylor-series linearization of the TOA model.

    ``estimate`` maps a :class:`LinearNuisanceModel` to the estimate of ``x``.
    Returns the list of iterates, starting with ``x0``.
    """
    xs = [np.asarray(x0, dtype=float)]
    for _ in range(iterations):
        built = build_tse(d, anchors, xs[-1], sigma)
        xs.append(built.extract_x(estimate(built.model)))
    return xs


def _fmt(v):
    return format(float(v), ".17g")


def dumps_scene(scene):
    lines = [f"{scene.dim} {scene.N}"]
    lines.extend(" ".join(_fmt(v) for v in a) for a in scene.anchors)
    lines.append(" ".join(_fmt(v) for v in scene.target))
    lines.append(
        f"r0={_fmt(scene.r0)} P0={_fmt(scene.P0)} gamma={_fmt(scene.gamma)} sigma={_fmt(scene.sigma)}"
    )
    return "\n".join(lines) + "\n"


def loads_scene(text):
    """Parse the plain-text scene format written by :func:`dumps_scene`."""
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise ValueError("first line must be 'dim N'")
    dim, N = int(rows[0][0]), int(rows[0][1])
    if len(rows) < N + 2:
        raise ValueError("scene file is truncated")
    anchors = np.array(rows[1 : N + 1], dtype=float)
    target = np.array(rows[N + 1], dtype=float)
    if anchors.shape != (N, dim):
        raise ValueError("anchor lines do not match the header")
    params = {}
    for row in rows[N + 2 :]:
        for token in row:
            key, sep, value = token.partition("=")
            if not sep or key not in ("r0", "P0", "gamma", "sigma"):
                raise ValueError(f"unexpected scene token {token!r}")
            params[key] = float(value)
    return LocScene(anchors, target, **params)
