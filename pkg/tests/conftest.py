import pytest

from viperkit.corpus import gen_corpus
from viperkit.perturb import perturb_sample


@pytest.fixture(scope="session")
def corpus():
    return gen_corpus(40, seed=0)


@pytest.fixture(scope="session")
def perturbed(corpus):
    """(sample, PerturbResult) for every sample of the default corpus."""
    return [(s, perturb_sample(s)) for s in corpus]


@pytest.fixture(scope="session")
def variants(perturbed):
    return [v for _, r in perturbed for v in r.variants]
