import pytest

from adoptindex import ModelSpec, StudySpec, validate_dataset


@pytest.fixture
def tam_cmm_spec():
    """Two linear six-stage models with equal weights."""
    return StudySpec([ModelSpec("TAM", 5), ModelSpec("CMM", 5)])


@pytest.fixture
def single_model_spec():
    return StudySpec([ModelSpec("M", 5)])


@pytest.fixture
def ladder_dataset(single_model_spec):
    """k=1 column holding stages 1..5, one per row."""
    rows = [(str(v), (v,)) for v in (1, 2, 3, 4, 5)]
    return validate_dataset(rows, single_model_spec)


def make_dataset(spec, columns):
    """Build a dataset from per-model columns of equal length."""
    rows = [
        (f"r{i}", tuple(int(col[i]) for col in columns))
        for i in range(len(columns[0]))
    ]
    return validate_dataset(rows, spec)
