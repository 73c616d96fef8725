"""Shared fixtures: a 9-row demographic relation and two anonymized forms.

The initial relation has 4 females among 9 rows and 3 Asians. r2 keeps
the three (Female, Asian) rows and stars GEN elsewhere (6 GEN stars,
3 revealed females). r1 stars more aggressively: no Asians and no
females remain visible. Both are 3-anonymous on (GEN, ETH) and are
suppression refinements of the initial relation.
"""

import pytest

from anonkit import STAR, Relation

# Filled by test_acceptance.py; echoed after the run so the per-criterion
# verdicts survive pytest's output capture.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

INITIAL_ROWS = [
    ("Female", "Asian"),
    ("Female", "Asian"),
    ("Female", "Asian"),
    ("Female", "White"),
    ("Male", "White"),
    ("Male", "White"),
    ("Male", "Black"),
    ("Male", "Black"),
    ("Male", "Black"),
]


@pytest.fixture
def r_initial() -> Relation:
    return Relation(["GEN", "ETH"], INITIAL_ROWS)


@pytest.fixture
def r1() -> Relation:
    rows = [
        (STAR, STAR),
        (STAR, STAR),
        (STAR, STAR),
        (STAR, "White"),
        (STAR, "White"),
        (STAR, "White"),
        ("Male", "Black"),
        ("Male", "Black"),
        ("Male", "Black"),
    ]
    return Relation(["GEN", "ETH"], rows)


@pytest.fixture
def r2() -> Relation:
    rows = [
        ("Female", "Asian"),
        ("Female", "Asian"),
        ("Female", "Asian"),
        (STAR, "White"),
        (STAR, "White"),
        (STAR, "White"),
        (STAR, "Black"),
        (STAR, "Black"),
        (STAR, "Black"),
    ]
    return Relation(["GEN", "ETH"], rows)


INITIAL_CSV = "GEN,ETH\n" + "\n".join(f"{g},{e}" for g, e in INITIAL_ROWS) + "\n"

R1_CSV = """GEN,ETH
*,*
*,*
*,*
*,White
*,White
*,White
Male,Black
Male,Black
Male,Black
"""

R2_CSV = """GEN,ETH
Female,Asian
Female,Asian
Female,Asian
*,White
*,White
*,White
*,Black
*,Black
*,Black
"""
