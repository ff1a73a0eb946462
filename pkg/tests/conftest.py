import pytest

from farmcoop import build_game, builtin_situation


@pytest.fixture(scope="session")
def sit_two():
    return builtin_situation("two_distributors")


@pytest.fixture(scope="session")
def sit_three():
    return builtin_situation("three_distributors")


@pytest.fixture(scope="session")
def sit_low():
    return builtin_situation("two_distributors_low_comp")


@pytest.fixture(scope="session")
def game_two(sit_two):
    return build_game(sit_two)


@pytest.fixture(scope="session")
def game_three(sit_three):
    return build_game(sit_three)


@pytest.fixture(scope="session")
def game_low(sit_low):
    return build_game(sit_low)
