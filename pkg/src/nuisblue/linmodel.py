"""Linear observation model with deterministic linear nuisance parameters.

The model is ``y = H x + G u + n`` with white noise of standard deviation
``sigma``. ``x`` (length L) is the parameter of interest and ``u`` (length M)
the nuisance.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .exceptions import RankViolation, ShapeViolation
from .matkernel import as_matrix, inv_sqrt_sym, rank_of

METHODS = ("JLS", "OSP1", "OSP2", "DIFF", "DIFF_UNWHITENED")


@dataclass(frozen=True, eq=False)
class LinearNuisanceModel:
    y: np.ndarray
    H: np.ndarray
    G: np.ndarray
    sigma: float = 1.0

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        H = as_matrix(self.H, "H")
        G = np.asarray(self.G, dtype=float)
        if G.ndim == 1:
            G = G[:, None]
        if G.size == 0:
            G = np.zeros((H.shape[0], 0))
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(G))):
            raise ValueError("model contains non-finite entries")
        if not (y.shape[0] == H.shape[0] == G.shape[0]):
            raise ShapeViolation(
                f"row mismatch: y {y.shape[0]}, H {H.shape[0]}, G {G.shape[0]}"
            )
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError("sigma must be finite and non-negative")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def N(self):
        return self.H.shape[0]

    @property
    def L(self):
        return self.H.shape[1]

    @property
    def M(self):
        return self.G.shape[1]

    @property
    def design(self):
        """The stacked matrix ``[H G]``."""
        return np.hstack([self.H, self.G])

    @classmethod
    def synthesize(cls, H, G, x, u, noise=None, sigma=1.0):
        """Build a model whose observations are ``H x + G u (+ noise)``."""
        H = as_matrix(H, "H")
        G = np.asarray(G, dtype=float).reshape(H.shape[0], -1)
        y = H @ np.asarray(x, dtype=float) + G @ np.asarray(u, dtype=float)
        if noise is not None:
            y = y + noise
        return cls(y, H, G, sigma)

    def with_y(self, y):
        return replace(self, y=y)


@dataclass
class EstimateReport:
    x_hat: np.ndarray
    method: str
    residual_norm: float
    u_hat: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        if self.u_hat is not None and self.method != "JLS":
            raise ValueError("only the joint estimator reports nuisance estimates")


def validate(model):
    """Check the shape and rank assumptions; return the model unchanged."""
    N, L, M = model.N, model.L, model.M
    if L < 1:
        raise ShapeViolation("need at least one parameter of interest")
    if N <= L or N <= M or N < L + M:
        raise ShapeViolation(f"need N > L, N > M and N >= L + M; got N={N}, L={L}, M={M}")
    rank = rank_of(model.design).rank
    if rank != L + M:
        raise RankViolation(f"rank([H G]) = {rank}, expected {L + M}")
    return model


def whiten(model, cov):
    """Left-multiply ``y``, ``H`` and ``G`` by ``cov^{-1/2}``.

    ``cov`` only needs to be known up to a positive scale; ``sigma`` is left
    untouched, callers that know the post-whitening noise level should set it.
    """
    cov = as_matrix(cov, "cov")
    if cov.shape != (model.N, model.N):
        raise ShapeViolation(f"covariance must be {model.N}x{model.N}, got {cov.shape}")
    W = inv_sqrt_sym(cov)
    return LinearNuisanceModel(W @ model.y, W @ model.H, W @ model.G, model.sigma)


def _fmt(v):
    return format(float(v), ".17g")


def dumps_model(model):
    """Plain-text form: header ``N L M sigma``, then y on one line, then the
    N rows of H and the N rows of G (G rows omitted when M = 0)."""
    lines = [f"{model.N} {model.L} {model.M} {_fmt(model.sigma)}"]
    lines.append(" ".join(_fmt(v) for v in model.y))
    lines.extend(" ".join(_fmt(v) for v in row) for row in model.H)
    if model.M:
        lines.extend(" ".join(_fmt(v) for v in row) for row in model.G)
    return "\n".join(lines) + "\n"


def loads_model(text):
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 4:
        raise ValueError("header must be 'N L M sigma'")
    N, L, M = (int(v) for v in rows[0][:3])
    sigma = float(rows[0][3])
    expected = 2 + N + (N if M else 0)
    if len(rows) != expected:
        raise ValueError(f"expected {expected} non-empty lines, got {len(rows)}")
    y = np.array(rows[1], dtype=float)
    H = np.array(rows[2 : 2 + N], dtype=float).reshape(N, L)
    G = np.array(rows[2 + N :], dtype=float).reshape(N, M) if M else np.zeros((N, 0))
    if y.shape != (N,):
        raise ValueError("y line has the wrong length")
    return LinearNuisanceModel(y, H, G, sigma)


def save_model(model, path):
    with open(path, "w") as fh:
        fh.write(dumps_model(model))


def load_model(path):
    with open(path) as fh:
        return loads_model(fh.read())
