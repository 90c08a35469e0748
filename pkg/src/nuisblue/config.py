"""Campaign configuration files: ``key = value`` lines under ``[section]``.

Sections ``[campaign]`` and ``[scene]`` mirror :class:`CampaignConfig`; any
other section or key is rejected with its line number.
"""

import configparser
import os
import re

import numpy as np

from .exceptions import ConfigError
from .harness import ROSTER, CampaignConfig
from .localization import FIG_ANCHORS, LABELS, loads_scene

CAMPAIGN_KEYS = {
    "trials", "seed", "sigma_grid", "models", "estimators", "tse_iterations",
    "tdoa_ref", "whitening", "target_redraw", "diff_reference",
}
SCENE_KEYS = {"anchors", "target", "field_size", "r0", "P0", "gamma", "scene_file"}
SECTIONS = {"campaign": CAMPAIGN_KEYS, "scene": SCENE_KEYS}

_KEY_RE = re.compile(r"^\s*([^\s=:#;\[][^=:]*?)\s*[=:]")
_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")


def _line_index(text):
    index, section = {}, None
    for n, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            index[(section, None)] = n
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            index.setdefault((section, m.group(1)), n)
    return index


def _floats(text):
    return [float(v) for v in re.split(r"[,\s]+", text.strip()) if v]


def parse_sigma_grid(text):
    m = re.fullmatch(r"\s*logspace\(([^)]*)\)\s*", text)
    if m:
        parts = _floats(m.group(1))
        if len(parts) != 3:
            raise ValueError("logspace needs (lo_exp, hi_exp, num)")
        return tuple(float(v) for v in np.logspace(parts[0], parts[1], int(parts[2])))
    return tuple(_floats(text))


def parse_points(text):
    if text.strip().lower() == "fig":
        return FIG_ANCHORS.copy()
    pts = [_floats(p) for p in text.split(";") if p.strip()]
    return np.array(pts, dtype=float)


def _names(text):
    return tuple(v for v in re.split(r"[,\s]+", text.strip()) if v)


def loads_config(text, base_dir=".", seed=None):
    """Parse configuration text into a :class:`CampaignConfig`.

    ``seed`` (e.g. from the command line) overrides the file; without either,
    ``NB_SEED`` from the environment is used, else 0.
    """
    lines = _line_index(text)
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#",), interpolation=None, strict=True
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("cannot parse line", lineno) from exc
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from exc

    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", lines.get((section, None)))
        for key in parser[section]:
            if key not in SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", lines.get((section, key)))

    kwargs = {}

    def field(section, key, convert):
        if not parser.has_option(section, key):
            return
        try:
            return convert(parser.get(section, key))
        except (ValueError, OSError, TypeError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lines.get((section, key))) from exc

    sc = "scene"
    scene_file = field(sc, "scene_file", str)
    if scene_file is not None:
        path = os.path.join(base_dir, scene_file)
        try:
            with open(path) as fh:
                scene = loads_scene(fh.read())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load scene file: {exc}", lines.get((sc, "scene_file"))) from exc
        kwargs.update(anchors=scene.anchors, r0=scene.r0, P0=scene.P0, gamma=scene.gamma)
        kwargs["target"] = tuple(scene.target)
    for key, conv in (
        ("anchors", parse_points),
        ("field_size", float),
        ("r0", float),
        ("P0", float),
        ("gamma", float),
    ):
        value = field(sc, key, conv)
        if value is not None:
            kwargs[key] = value
    target = field(sc, "target", str)
    if target is not None:
        kwargs["target"] = None if target.strip().lower() == "random" else tuple(_floats(target))

    cp = "campaign"
    for key, conv in (
        ("trials", int),
        ("seed", int),
        ("sigma_grid", parse_sigma_grid),
        ("tse_iterations", int),
        ("tdoa_ref", int),
        ("whitening", str.strip),
        ("target_redraw", str.strip),
        ("diff_reference", str.strip),
    ):
        value = field(cp, key, conv)
        if value is not None:
            kwargs[key] = value
    models = field(cp, "models", _names)
    if models is not None:
        bad = [m for m in models if m not in LABELS]
        if bad:
            raise ConfigError(f"unknown model label {bad[0]!r}", lines.get((cp, "models")))
        kwargs["models"] = models
    estimators = field(cp, "estimators", _names)
    if estimators is not None:
        if estimators == ("all",):
            estimators = tuple(ROSTER)
        bad = [t for t in estimators if t not in ROSTER]
        if bad:
            raise ConfigError(f"unknown estimator tag {bad[0]!r}", lines.get((cp, "estimators")))
        kwargs["estimators"] = estimators
    elif "models" in kwargs:
        kwargs["estimators"] = tuple(ROSTER)

    if seed is not None:
        kwargs["seed"] = int(seed)
    elif "seed" not in kwargs and os.environ.get("NB_SEED"):
        kwargs["seed"] = int(os.environ["NB_SEED"])
    try:
        return CampaignConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, seed=None):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return loads_config(text, os.path.dirname(os.path.abspath(path)), seed)
