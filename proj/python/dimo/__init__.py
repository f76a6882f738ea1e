"""Multi-pass GUI grounding: geometry, engine, synthetic suites and the CLI."""

import json as _json

from . import _dimo
from ._dimo import (
    BackendError,
    BackendUnavailable,
    ConfigError,
    GenerationError,
    ImageError,
    OutOfRegionError,
    ParseFailure,
    PreconditionError,
    ProtocolError,
    crop_around,
    parse_choice,
    parse_point,
    point_in_box,
    run_cli,
    stop_condition,
    stop_threshold,
    to_global,
    to_local,
)

__all__ = [
    "BackendError",
    "BackendUnavailable",
    "ConfigError",
    "GenerationError",
    "ImageError",
    "OutOfRegionError",
    "ParseFailure",
    "PreconditionError",
    "ProtocolError",
    "aggregate",
    "chat_request",
    "crop_around",
    "generate_screen",
    "ground_scripted",
    "parse_choice",
    "parse_point",
    "point_in_box",
    "predict_request",
    "render_screen_png",
    "run_cli",
    "run_synthetic_suite",
    "select_request",
    "stop_condition",
    "stop_threshold",
    "to_global",
    "to_local",
]


def _text_map(values):
    """Config overrides as the textual values the core parses."""
    out = {}
    for key, value in (values or {}).items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        out[key] = str(value)
    return out


def ground_scripted(image_png, instruction, script, engine=None):
    """Grounds with a scripted backend. `script` is a dict or JSON text."""
    if not isinstance(script, str):
        script = _json.dumps(script)
    doc = _dimo.ground_scripted(image_png, instruction, script, _text_map(engine))
    return _json.loads(doc)


def generate_screen(seed, gen=None):
    return _json.loads(_dimo.generate_screen(seed, _text_map(gen)))


def run_synthetic_suite(n, engines, oracles, seed=0, gen=None, parallelism=1):
    """One report dict per (oracle, engine) pair, oracle-major."""
    doc = _dimo.run_synthetic_suite(
        n,
        [_text_map(e) for e in engines],
        [_text_map(o) for o in oracles],
        seed,
        _text_map(gen),
        parallelism,
    )
    return _json.loads(doc)


def aggregate(records, label=""):
    """Returns (report dict, csv text, markdown text)."""
    doc, csv, markdown = _dimo.aggregate(_json.dumps(list(records)), label)
    return _json.loads(doc), csv, markdown


def predict_request(crop_png, instruction, modality):
    return _dimo.predict_request_body(crop_png, instruction, modality)


def select_request(image_png, instruction, text_candidate, icon_candidate):
    return _dimo.select_request_body(image_png, instruction, text_candidate, icon_candidate)


def chat_request(image_png, prompt, model):
    return _dimo.chat_request_body(image_png, prompt, model)


def render_screen_png(seed, gen=None):
    return _dimo.render_screen_png(seed, _text_map(gen))
