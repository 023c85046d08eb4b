import pytest

FIXTURE_DICTIONARY = """
a brown dog plays in deep pile of snow it does not get gets
three kids forest standing on tree log children crossing stream
the happy sad man woman is are empty full big small none never no
premise hypothesis word words this that
""".split()

FIXTURE_ANTONYMS = [
    ("happy", "sad"),
    ("big", "small"),
    ("empty", "full"),
    ("deep", "shallow"),
]


@pytest.fixture()
def dictionary_file(tmp_path):
    path = tmp_path / "dictionary.txt"
    path.write_text("\n".join(FIXTURE_DICTIONARY) + "\n", encoding="utf-8")
    return path


@pytest.fixture()
def antonyms_file(tmp_path):
    path = tmp_path / "antonyms.tsv"
    path.write_text("".join(f"{a}\t{b}\n" for a, b in FIXTURE_ANTONYMS), encoding="utf-8")
    return path


@pytest.fixture()
def negations_file(tmp_path):
    path = tmp_path / "negations.txt"
    path.write_text("no\nnot\nnever\nnone\n", encoding="utf-8")
    return path
