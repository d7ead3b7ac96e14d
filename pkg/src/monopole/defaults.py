"""Frozen calibration constants, loaded from ``defaults.json``."""
import json
from pathlib import Path

DEFAULTS_PATH = Path(__file__).with_name("defaults.json")
DEFAULTS = json.loads(DEFAULTS_PATH.read_text())
