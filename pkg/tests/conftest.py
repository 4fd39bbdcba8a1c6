import pytest

from gseed.corpus import load_corpus_spec


@pytest.fixture(scope="session")
def geo():
    return load_corpus_spec("geometric")


@pytest.fixture(scope="session")
def apery():
    return load_corpus_spec("apery")


@pytest.fixture(scope="session")
def specs():
    from gseed.corpus import corpus_specs

    return corpus_specs()
