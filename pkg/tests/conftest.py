from pathlib import Path

import pytest

from knowledge.store import build_kb
from subjectlang.project import compile_sources, load_project

CORPUS = Path(__file__).resolve().parent.parent / "fixtures" / "corpus"

CONDITION = "Metaphone#conditionC0/(string,int)"
CONTAINS = "Metaphone#contains/(string,int)"
IS_VOWEL = "Metaphone#isVowel/(char)"


def corpus_source(name: str) -> str:
    return (CORPUS / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def metaphone_source():
    return corpus_source("Metaphone.sj")


@pytest.fixture(scope="session")
def metaphone_model(metaphone_source):
    return compile_sources({"Metaphone.sj": metaphone_source})


@pytest.fixture(scope="session")
def metaphone_kb(metaphone_model):
    return build_kb(metaphone_model)


@pytest.fixture(scope="session")
def corpus_model():
    return load_project(str(CORPUS))


@pytest.fixture(scope="session")
def corpus_kb(corpus_model):
    return build_kb(corpus_model)


@pytest.fixture
def compile_one():
    """Compile a single inline source file."""
    def _compile(text: str, path: str = "Subject.sj"):
        return compile_sources({path: text})
    return _compile
