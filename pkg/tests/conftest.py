import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from regretcert.constants import check_consistency
from regretcert.elicitation import cell_decomposition, level_set_atlas
from regretcert.zoo import builtin


@pytest.fixture(scope="session")
def hinge_entry():
    return builtin("hinge_zero_one")


@pytest.fixture(scope="session")
def bep_entry():
    return builtin("bep_abstain_4")


@pytest.fixture(scope="session")
def hinge_atlas(hinge_entry):
    return level_set_atlas(hinge_entry.problem.surrogate)


@pytest.fixture(scope="session")
def bep_atlas(bep_entry):
    return level_set_atlas(bep_entry.problem.surrogate)


@pytest.fixture(scope="session")
def hinge_cells(hinge_entry, hinge_atlas):
    return cell_decomposition(
        hinge_entry.problem.surrogate, hinge_entry.problem.target, hinge_atlas
    )


@pytest.fixture(scope="session")
def bep_cells(bep_entry, bep_atlas):
    return cell_decomposition(
        bep_entry.problem.surrogate, bep_entry.problem.target, bep_atlas
    )


@pytest.fixture(scope="session")
def hinge_certificate(hinge_entry, hinge_atlas, hinge_cells):
    return check_consistency(hinge_entry.problem, hinge_atlas, hinge_cells)


@pytest.fixture(scope="session")
def bep_certificate(bep_entry, bep_atlas, bep_cells):
    return check_consistency(bep_entry.problem, bep_atlas, bep_cells)
