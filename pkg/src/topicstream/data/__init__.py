"""Bundled data files: default stopword list, irregular lemma forms, and
a 30-post sample corpus."""

from importlib import resources
from pathlib import Path


def sample_corpus_path() -> Path:
    """Path of the bundled 30-post sample corpus (JSONL)."""
    return Path(str(resources.files(__name__).joinpath("sample_posts.jsonl")))
