"""Command-line entry point: ``blockmedc run`` and ``blockmedc inspect``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from blockmedc.cas import CasStore, MemoryCas
from blockmedc.config import load_config
from blockmedc.contracts.certificates import MalformedDocument, parse_document
from blockmedc.contracts.university import ANCHORABLE, SubjectKind
from blockmedc.crypto import Address, generate_account
from blockmedc.encoding import render
from blockmedc.errors import BlockMedcError, IntegrityViolation, ObjectNotFound, UnknownSubject
from blockmedc.reports import format_events, format_gas_report, gas_report
from blockmedc.scenario import ParseError, load_scenario, run_scenario
from blockmedc.verification import LedgerView, verify_by_id, verify_document

SEED_ENV = "BLOCKMEDC_SEED"
EXIT_OK, EXIT_EXPECT, EXIT_PARSE = 0, 1, 2


class PathNotFound(BlockMedcError):
    pass


def _seed(flag: str | None) -> bytes:
    text = os.environ.get(SEED_ENV) or flag or ""
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise ParseError(f"seed is not hex: {text!r}") from None


def cmd_run(ns) -> int:
    scenario = Path(ns.scenario)
    if not scenario.is_file():
        raise PathNotFound(str(scenario))
    commands = load_scenario(scenario)
    try:
        config = load_config(ns.config)
    except (OSError, ValueError, KeyError) as exc:
        raise ParseError(f"config: {exc}") from None
    cas = CasStore(ns.cas_dir) if ns.cas_dir else MemoryCas()
    runner = run_scenario(commands, config, _seed(ns.seed), cas)
    if ns.export:
        Path(ns.export).parent.mkdir(parents=True, exist_ok=True)
        Path(ns.export).write_bytes(runner.ledger.export_ledger())
    for f in runner.failures:
        print(f"FAIL {f}", file=sys.stderr)
    n = len(runner.outcomes)
    print(f"{n} commands, {len(runner.ledger.receipts)} receipts, {len(runner.failures)} expectation failures")
    return EXIT_EXPECT if runner.failures else EXIT_OK


def _view(ns) -> LedgerView:
    path = Path(ns.export)
    if not path.is_file():
        raise PathNotFound(str(path))
    return LedgerView.from_jsonl(path)


def _cas(ns):
    if ns.cas_dir is None:
        return MemoryCas()
    if not Path(ns.cas_dir).is_dir():
        raise PathNotFound(ns.cas_dir)
    return CasStore(ns.cas_dir)


def _address(text: str, seed: bytes) -> Address:
    if text.startswith("0x"):
        return Address.from_hex(text)
    return generate_account(text.encode("utf-8") + seed)[0]


def cmd_events(ns) -> int:
    for row in format_events(_view(ns).records, ns.name, ns.contract):
        print(row)
    return EXIT_OK


def cmd_gas_report(ns) -> int:
    print(format_gas_report(gas_report(_view(ns).records)))
    return EXIT_OK


def cmd_certificate(ns) -> int:
    view, cas = _view(ns), _cas(ns)
    cid = ns.cid
    if cid is None:
        wanted = ns.instance.lower()
        for events in view.files.values():
            for e in events:
                try:
                    if parse_document(cas.fetch(e.args["cid"])).instance.hex == wanted:
                        cid = e.args["cid"]
                except (ObjectNotFound, IntegrityViolation, MalformedDocument):
                    continue
        if cid is None:
            print(f"no stored document for instance {ns.instance}", file=sys.stderr)
            return EXIT_EXPECT
    data = cas.fetch(cid)
    doc = parse_document(data)
    kind = next(k for k, kinds in ANCHORABLE.items() if doc.kind in kinds)
    result = verify_document(view, data, doc.record.receiver, kind)
    out = {
        "cid": cid,
        "kind": doc.kind,
        "instance": doc.instance.hex,
        "issuerContract": doc.issuer_contract.hex,
        "record": render(doc.record),
        "payloadDigest": "0x" + doc.payload_digest.hex(),
        "signatures": [s.role.value for s in doc.signatures or ()],
        "verification": result.to_json(),
    }
    print(json.dumps(out, indent=2, ensure_ascii=False))
    return EXIT_OK


def cmd_portfolio(ns) -> int:
    view, cas = _view(ns), _cas(ns)
    subject = _address(ns.subject, _seed(ns.seed))
    try:
        summary = verify_by_id(view, cas, subject, SubjectKind(ns.kind))
    except UnknownSubject:
        print(f"unknown subject {subject.hex}", file=sys.stderr)
        return EXIT_EXPECT
    if ns.json:
        print(json.dumps(summary.to_json(), indent=2, ensure_ascii=False))
        return EXIT_OK
    print(f"{summary.kind} {summary.subject}: {len(summary.items)} items, {len(summary.files)} files")
    for item in summary.items:
        r = item.result
        print(f"  {item.kind:<15} {item.instance} {r.verdict}{'' if r.valid else ' (' + r.reason + ')'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blockmedc", description="Academic credential ledger simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a JSON Lines scenario")
    run.add_argument("scenario")
    run.add_argument("--config", help="JSON config (gasSchedule + gradingPolicy); defaults shipped")
    run.add_argument("--export", help="write the ledger export (JSON Lines) here")
    run.add_argument("--cas-dir", help="content-addressed store directory (in-memory if omitted)")
    run.add_argument("--seed", help=f"global account seed, hex (overridden by ${SEED_ENV})")
    run.set_defaults(func=cmd_run)

    insp = sub.add_parser("inspect", help="read-only reports over an export")
    isub = insp.add_subparsers(dest="report", required=True)

    def common(sp):
        sp.add_argument("--export", required=True)
        sp.add_argument("--cas-dir")
        return sp

    ev = common(isub.add_parser("events"))
    ev.add_argument("--name")
    ev.add_argument("--contract")
    ev.set_defaults(func=cmd_events)

    cert = common(isub.add_parser("certificate"))
    g = cert.add_mutually_exclusive_group(required=True)
    g.add_argument("--cid")
    g.add_argument("--instance")
    cert.set_defaults(func=cmd_certificate)

    port = common(isub.add_parser("portfolio"))
    port.add_argument("--subject", required=True, help="0x address or actor alias")
    port.add_argument("--kind", default="Student", choices=[k.value for k in SubjectKind])
    port.add_argument("--seed")
    port.add_argument("--json", action="store_true")
    port.set_defaults(func=cmd_portfolio)

    gas = common(isub.add_parser("gas-report"))
    gas.set_defaults(func=cmd_gas_report)
    return p


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return ns.func(ns)
    except (ParseError, PathNotFound) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ObjectNotFound, IntegrityViolation, MalformedDocument) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_EXPECT


if __name__ == "__main__":
    sys.exit(main())
