import json
import shutil
from pathlib import Path

import pytest

from cubenav import AnnotationStore, PreferenceStore, Workspace, load_schema

REPO = Path(__file__).resolve().parent.parent
EXAMPLES = REPO / "examples"
SCHEMA_PATH = EXAMPLES / "fig1.schema.json"
DATA_DIR = EXAMPLES / "data"
ANNOTATIONS_PATH = EXAMPLES / "annotations.jsonl"
PREFERENCES_PATH = EXAMPLES / "preferences.jsonl"


@pytest.fixture(scope="session")
def schema_doc() -> dict:
    return json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))


@pytest.fixture()
def constellation():
    return load_schema(SCHEMA_PATH)


@pytest.fixture()
def workspace(tmp_path):
    """Fresh workspace per test; store files copied so mutation is isolated."""
    annos = tmp_path / "annotations.jsonl"
    prefs = tmp_path / "preferences.jsonl"
    shutil.copy(ANNOTATIONS_PATH, annos)
    shutil.copy(PREFERENCES_PATH, prefs)
    return Workspace.load(SCHEMA_PATH, DATA_DIR, annotations_path=annos, preferences_path=prefs)


@pytest.fixture()
def bare_workspace():
    """Workspace with empty in-memory stores."""
    return Workspace.load(SCHEMA_PATH, DATA_DIR)


@pytest.fixture()
def fig1_stores(constellation):
    """In-memory stores preloaded with the example annotations and preferences.

    Paths are detached after loading so additions never touch the shipped files.
    """
    annos = AnnotationStore(constellation, ANNOTATIONS_PATH)
    prefs = PreferenceStore(constellation, PREFERENCES_PATH)
    annos.path = None
    prefs.path = None
    constellation.annotations = annos
    constellation.preferences = prefs
    return annos, prefs
