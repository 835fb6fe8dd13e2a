import itertools

import pytest

from verifi import config, workflow


@pytest.fixture
def data_dir(tmp_path, monkeypatch):
    """Initialized data directory, isolated from ambient env overrides."""
    for var in (config.ENV_DATA_DIR, config.ENV_TOKEN_SECRET,
                config.ENV_QUORUM, config.ENV_BIND):
        monkeypatch.delenv(var, raising=False)
    paths = config.init_data_dir(tmp_path / "data")
    return paths.data_dir


@pytest.fixture
def service(data_dir):
    counter = itertools.count()
    tick = itertools.count(1_700_000_000)
    return workflow.open_service(
        data_dir,
        clock=lambda: next(tick),
        id_factory=lambda: f"id{next(counter):04d}",
    )


@pytest.fixture
def seeded(service):
    """Admin, applicant, and company accounts with verified claims."""
    service.create_admin("root", "Registrar", "root-pw")
    service.register_user("ann", workflow.Role.APPLICANT, "Ann Applicant", "ann-pw")
    service.register_user("corp", workflow.Role.COMPANY, "Corp Inc", "corp-pw")
    return {
        "service": service,
        "admin": service.verify_token(service.authenticate("root", "root-pw")),
        "applicant": service.verify_token(service.authenticate("ann", "ann-pw")),
        "company": service.verify_token(service.authenticate("corp", "corp-pw")),
    }
