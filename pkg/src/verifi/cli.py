"""Operator tooling: init, serve, admin bootstrap, ledger audit, object-store
inspection, and demo seeding.

Exit codes: 0 ok, 1 error, 2 tamper or corruption found.
"""

from __future__ import annotations

import fcntl
import json
import secrets
import sys
from contextlib import contextmanager
from pathlib import Path

import click

from . import config, ledger, workflow
from .cas import Cid, CorruptObject, NotFound, ObjectStore

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TAMPER = 2


def _fail(message: str, code: int = EXIT_ERROR):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@contextmanager
def _exclusive_lock(paths: config.Paths, hold: bool = False):
    """Non-blocking exclusive lock on the data dir; `serve` holds it for
    its lifetime so mutating commands cannot race a live server."""
    fh = open(paths.lock_file, "a+")
    try:
        fcntl.flock(fh, fcntl.LOCK_EX | fcntl.LOCK_NB)
    except OSError:
        fh.close()
        _fail("data directory is locked (is a server running?)")
    try:
        yield
    finally:
        if not hold:
            fcntl.flock(fh, fcntl.LOCK_UN)
        fh.close()


@click.group()
@click.option("--data-dir", envvar=config.ENV_DATA_DIR, type=click.Path(path_type=Path),
              help=f"data directory (or ${config.ENV_DATA_DIR})")
@click.pass_context
def cli(ctx, data_dir):
    ctx.obj = data_dir


def _paths(ctx) -> config.Paths:
    if ctx.obj is None:
        _fail(f"no data directory given (use --data-dir or ${config.ENV_DATA_DIR})")
    try:
        return config.require_initialized(ctx.obj)
    except config.NotInitialized as exc:
        _fail(str(exc))


@cli.command()
@click.option("--quorum", default=None, help="validator quorum, e.g. 2of3")
@click.pass_context
def init(ctx, quorum):
    """Create the data dir layout, secrets, validator keys, and genesis block."""
    if ctx.obj is None:
        _fail(f"no data directory given (use --data-dir or ${config.ENV_DATA_DIR})")
    try:
        q = config.parse_quorum(quorum) if quorum else None
        paths = config.init_data_dir(ctx.obj, quorum=q)
    except config.AlreadyInitialized as exc:
        _fail(str(exc))
    except config.ConfigError as exc:
        _fail(str(exc))
    cfg = json.loads(paths.config_file.read_text())
    click.echo(f"initialized {paths.data_dir}")
    click.echo(f"quorum {cfg['quorum']}")
    click.echo(f"genesis {ledger.GENESIS_HEADER_HASH.hex()}")


@cli.command()
@click.option("--bind", default=None, help=f"host:port (or ${config.ENV_BIND})")
@click.option("--static", "static_dir", type=click.Path(path_type=Path), default=None,
              help="directory of web UI assets to serve at /")
@click.pass_context
def serve(ctx, bind, static_dir):
    """Run the REST service (holds the data-dir lock while running)."""
    import uvicorn

    from .api import create_app

    paths = _paths(ctx)
    host, port = config.bind_from_env(bind)
    if static_dir is None:
        for candidate in (paths.data_dir / "webui", Path("frontend") / "dist"):
            if candidate.is_dir():
                static_dir = candidate
                break
    with _exclusive_lock(paths, hold=True):
        service = workflow.open_service(paths.data_dir)
        app = create_app(service, static_dir=static_dir)
        click.echo(f"serving on http://{host}:{port} (chain height {service.chain.height})")
        uvicorn.run(app, host=host, port=port, log_level="warning")


@cli.group()
def admin():
    """Admin account management."""


@admin.command("create")
@click.argument("user_id")
@click.option("--display-name", default=None)
@click.pass_context
def admin_create(ctx, user_id, display_name):
    """Bootstrap an Admin account; prints a one-time password."""
    paths = _paths(ctx)
    with _exclusive_lock(paths):
        service = workflow.open_service(paths.data_dir)
        password = secrets.token_urlsafe(12)
        try:
            service.create_admin(user_id, display_name or user_id, password)
        except workflow.DuplicateUser:
            _fail(f"user {user_id!r} already exists")
        click.echo(f"admin {user_id} created")
        click.echo(f"one-time password: {password}")


@cli.group("ledger")
def ledger_group():
    """Chain audit and inspection."""


@ledger_group.command("verify")
@click.pass_context
def ledger_verify(ctx):
    """Full tamper scan of the persisted chain; exit 2 on any violation."""
    paths = _paths(ctx)
    validators = config.validator_set_only(paths)
    memo = config.open_sig_memo(paths, readonly=True)
    report = ledger.scan_chain_file(paths.ledger_dir / ledger.CHAIN_FILE,
                                    validators, memo)
    if report.ok:
        click.echo("chain ok")
        sys.exit(EXIT_OK)
    click.echo(f"TAMPERED height={report.height} kind={report.kind}")
    sys.exit(EXIT_TAMPER)


@ledger_group.command("show")
@click.argument("ref")
@click.pass_context
def ledger_show(ctx, ref):
    """Dump a block (by height) or transaction (by hash) as canonical JSON."""
    paths = _paths(ctx)
    chain = config.open_ledger(paths)
    if ref.isdigit():
        try:
            block = chain.get_block(int(ref))
        except ledger.LedgerError as exc:
            _fail(str(exc))
        out = {
            "header": {
                "version": block.header.version,
                "height": block.header.height,
                "prev_hash": block.header.prev_hash.hex(),
                "merkle_root": block.header.merkle_root.hex(),
                "timestamp": block.header.timestamp,
                "proposer_pubkey": block.header.proposer_pubkey.hex(),
                "block_hash": block.header.hash().hex(),
            },
            "txs": [tx._fields(with_signature=True) for tx in block.txs],
            "validator_signatures": [
                {"validator_pubkey": pk.hex(), "signature": sig.hex()}
                for pk, sig in block.validator_signatures],
        }
        click.echo(json.dumps(out, sort_keys=True, separators=(",", ":")))
        return
    located = chain.find_tx(ref)
    if located is None:
        _fail(f"no block height or tx hash {ref!r}")
    height, idx, tx = located
    click.echo(json.dumps({"height": height, "tx_index": idx,
                           "tx": tx._fields(with_signature=True)},
                          sort_keys=True, separators=(",", ":")))


@cli.group("cas")
def cas_group():
    """Object-store tools."""


@cas_group.command("add")
@click.argument("file", type=click.Path(path_type=Path, exists=True, dir_okay=False))
@click.pass_context
def cas_add(ctx, file):
    """Store a file; prints its CID."""
    paths = _paths(ctx)
    with _exclusive_lock(paths):
        cid = ObjectStore(paths.cas_dir).put(file.read_bytes())
    click.echo(cid.text)


@cas_group.command("get")
@click.argument("cid_text")
@click.argument("out", type=click.Path(path_type=Path, dir_okay=False))
@click.pass_context
def cas_get(ctx, cid_text, out):
    """Retrieve verified bytes for a CID into a file."""
    paths = _paths(ctx)
    try:
        cid = Cid.from_text(cid_text)
    except ValueError as exc:
        _fail(str(exc))
    store = ObjectStore(paths.cas_dir)
    try:
        data = store.get(cid)
    except NotFound as exc:
        _fail(str(exc))
    except CorruptObject as exc:
        _fail(str(exc), code=EXIT_TAMPER)
    out.write_bytes(data)
    click.echo(f"wrote {len(data)} bytes")


@cas_group.command("verify")
@click.pass_context
def cas_verify(ctx):
    """Re-hash every stored object; exit 2 on corruption or missing children."""
    paths = _paths(ctx)
    report = ObjectStore(paths.cas_dir).verify()
    if report.ok:
        click.echo("object store ok")
        sys.exit(EXIT_OK)
    for cid in report.corrupt:
        click.echo(f"corrupt {cid.text}")
    for cid in report.missing:
        click.echo(f"missing {cid.text}")
    sys.exit(EXIT_TAMPER)


@cli.group("demo")
def demo_group():
    """Demo data."""


@demo_group.command("seed")
@click.pass_context
def demo_seed(ctx):
    """Create 1 admin, 2 applicants, 1 company, and 3 anchored certificates."""
    paths = _paths(ctx)
    with _exclusive_lock(paths):
        service = workflow.open_service(paths.data_dir)
        admin_rec = service.create_admin("admin", "Registrar", "admin-pw")
        alice = service.register_user("alice", workflow.Role.APPLICANT, "Alice Rahman", "alice-pw")
        bob = service.register_user("bob", workflow.Role.APPLICANT, "Bob Mouno", "bob-pw")
        service.register_user("acme", workflow.Role.COMPANY, "Acme Hiring", "acme-pw")

        admin_token = service.verify_token(service.authenticate("admin", "admin-pw"))
        specs = [
            ("alice", "BSc Computer Science", "Liberal Arts University"),
            ("alice", "Cloud Engineering Certificate", "Cloud Institute"),
            ("bob", "MSc Data Science", "North University"),
        ]
        for user_id, title, issuer in specs:
            token = service.verify_token(service.authenticate(user_id, f"{user_id}-pw"))
            body = f"DEMO CERTIFICATE\n{title}\nawarded to {user_id}\n".encode() * 64
            cert = service.upload_certificate(token, title, issuer, body)
            service.admin_claim(admin_token, cert["certificate_id"])
            record = service.admin_decide(admin_token, cert["certificate_id"], "Approve",
                                          note=f"verified with {issuer} (demo)",
                                          fee_approved=True)
            click.echo(f"certificate {record['certificate_id']} "
                       f"applicant={user_id} share_code={record['share_code']}")
        click.echo("users: admin/admin-pw alice/alice-pw bob/bob-pw acme/acme-pw")
        click.echo(f"chain height {service.chain.height}")
        _ = admin_rec, alice, bob


def main():
    cli(prog_name="verifi")


if __name__ == "__main__":
    main()
