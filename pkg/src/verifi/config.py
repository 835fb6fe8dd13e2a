"""Data-directory layout, environment variables, and initialization."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from . import crypto, ledger

ENV_DATA_DIR = "VERIFI_DATA_DIR"
ENV_BIND = "VERIFI_BIND"
ENV_TOKEN_SECRET = "VERIFI_TOKEN_SECRET"
ENV_QUORUM = "VERIFI_QUORUM"

DEFAULT_BIND = "127.0.0.1:8080"
DEFAULT_QUORUM = (2, 3)


class ConfigError(Exception):
    pass


class NotInitialized(ConfigError):
    pass


class AlreadyInitialized(ConfigError):
    pass


@dataclass(frozen=True)
class Paths:
    data_dir: Path

    @property
    def config_file(self) -> Path:
        return self.data_dir / "config.json"

    @property
    def cas_dir(self) -> Path:
        return self.data_dir / "cas"

    @property
    def ledger_dir(self) -> Path:
        return self.data_dir / "ledger"

    @property
    def db_dir(self) -> Path:
        return self.data_dir / "db"

    @property
    def pending_dir(self) -> Path:
        return self.data_dir / "db" / "pending"

    @property
    def secrets_dir(self) -> Path:
        return self.data_dir / "secrets"

    @property
    def token_secret_file(self) -> Path:
        return self.secrets_dir / "token_secret"

    @property
    def memo_key_file(self) -> Path:
        return self.secrets_dir / "memo_key"

    @property
    def validators_file(self) -> Path:
        return self.ledger_dir / ledger.VALIDATORS_FILE

    @property
    def lock_file(self) -> Path:
        return self.data_dir / ".lock"


def parse_quorum(text: str) -> tuple[int, int]:
    """Parse the `KofN` form (e.g. "2of3") into (quorum, validator count)."""
    try:
        k_str, n_str = text.lower().split("of")
        k, n = int(k_str), int(n_str)
    except ValueError:
        raise ConfigError(f"quorum must look like '2of3', got {text!r}") from None
    if not 1 <= k <= n:
        raise ConfigError(f"quorum {k} must be in 1..{n}")
    return k, n


def data_dir_from_env(explicit: str | None = None) -> Path:
    value = explicit or os.environ.get(ENV_DATA_DIR)
    if not value:
        raise ConfigError(f"no data directory given and {ENV_DATA_DIR} is unset")
    return Path(value)


def bind_from_env(explicit: str | None = None) -> tuple[str, int]:
    value = explicit or os.environ.get(ENV_BIND, DEFAULT_BIND)
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"bind address must be host:port, got {value!r}")
    return host, int(port)


def init_data_dir(data_dir: Path, quorum: tuple[int, int] | None = None) -> Paths:
    """Create the layout, secrets, validator keys, and genesis block.

    Fails if the directory already holds an initialized deployment.
    """
    paths = Paths(Path(data_dir))
    if paths.config_file.exists():
        raise AlreadyInitialized(f"{paths.data_dir} is already initialized")
    if quorum is None:
        env_q = os.environ.get(ENV_QUORUM)
        quorum = parse_quorum(env_q) if env_q else DEFAULT_QUORUM
    k, n = quorum

    for d in (paths.data_dir, paths.cas_dir, paths.ledger_dir,
              paths.db_dir, paths.pending_dir, paths.secrets_dir):
        d.mkdir(parents=True, exist_ok=True)
    paths.secrets_dir.chmod(0o700)

    env_secret = os.environ.get(ENV_TOKEN_SECRET)
    token_secret = bytes.fromhex(env_secret) if env_secret else os.urandom(32)
    paths.token_secret_file.write_text(token_secret.hex() + "\n")
    paths.memo_key_file.write_text(os.urandom(32).hex() + "\n")

    proposer = crypto.keygen()
    validator_seeds = [crypto.keygen().secret_key.hex() for _ in range(n)]
    paths.validators_file.parent.mkdir(parents=True, exist_ok=True)
    paths.validators_file.write_text(json.dumps({
        "proposer_seed": proposer.secret_key.hex(),
        "quorum": k,
        "validator_seeds": validator_seeds,
    }, indent=2, sort_keys=True) + "\n")

    # constructing the ledger writes the genesis block
    validators = [ledger.SimValidator(crypto.keygen(bytes.fromhex(s)))
                  for s in validator_seeds]
    ledger.Ledger(paths.ledger_dir, proposer, validators, k)

    paths.lock_file.touch()
    paths.config_file.write_text(json.dumps({
        "quorum": f"{k}of{n}",
        "version": 1,
    }, indent=2, sort_keys=True) + "\n")
    return paths


def require_initialized(data_dir: Path) -> Paths:
    paths = Paths(Path(data_dir))
    if not paths.config_file.exists():
        raise NotInitialized(f"{paths.data_dir} is not an initialized data directory "
                             f"(run `verifi init` first)")
    return paths


def load_token_secret(paths: Paths) -> bytes:
    env_secret = os.environ.get(ENV_TOKEN_SECRET)
    if env_secret:
        return bytes.fromhex(env_secret)
    return bytes.fromhex(paths.token_secret_file.read_text().strip())


def load_validator_config(paths: Paths):
    """Returns (proposer KeyPair, [SimValidator], quorum)."""
    cfg = json.loads(paths.validators_file.read_text())
    proposer = crypto.keygen(bytes.fromhex(cfg["proposer_seed"]))
    validators = [ledger.SimValidator(crypto.keygen(bytes.fromhex(seed)))
                  for seed in cfg["validator_seeds"]]
    return proposer, validators, int(cfg["quorum"])


def open_ledger(paths: Paths, clock=None) -> ledger.Ledger:
    proposer, validators, quorum = load_validator_config(paths)
    memo = ledger.SigMemo(bytes.fromhex(paths.memo_key_file.read_text().strip()),
                          paths.ledger_dir / ledger.SIG_MEMO_FILE)
    return ledger.Ledger(paths.ledger_dir, proposer, validators, quorum,
                         clock=clock, memo=memo)


def validator_set_only(paths: Paths) -> ledger.ValidatorSet:
    """Public validator view for read-only verification paths."""
    proposer, validators, quorum = load_validator_config(paths)
    return ledger.ValidatorSet([v.pubkey for v in validators], quorum)


def open_sig_memo(paths: Paths, readonly: bool = False) -> ledger.SigMemo:
    return ledger.SigMemo(bytes.fromhex(paths.memo_key_file.read_text().strip()),
                          paths.ledger_dir / ledger.SIG_MEMO_FILE,
                          readonly=readonly)
