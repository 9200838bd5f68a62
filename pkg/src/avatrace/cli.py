"""Command-line interface.

Persistent state (keys, avatar records, session tokens) lives as JSON in
``--state-dir``; the MIT ledger and the trusted SN -> ID store are separate
files so they can be pointed elsewhere. Secret keys are stored in the clear:
this is a research harness, not a wallet.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import secrets
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import bench, biometric, cps, secgames
from .bilinear import BLS12_381_R, InsecureGroupError, Params, setup
from .identity import Avatar, UserId, describe_avatar, to_debug_json
from .protocols import (
    AccusationRejected,
    AvatarContext,
    Evidence,
    PlatformServer,
    ProtocolAbort,
    ProxyContext,
    UserContext,
    delegate,
    evidence_from,
    login,
    make_transport,
    mutual_auth,
    trace_detailed,
)
from .registry import Registry, RegistryError


STATE_FILE = "state.json"


@dataclass
class CliState:
    backend: str
    toy_order: int
    idp_sk: int
    authority_token: str
    users: dict = field(default_factory=dict)
    proxies: dict = field(default_factory=dict)
    avatars: dict = field(default_factory=dict)
    tokens: dict = field(default_factory=dict)
    # aid hex -> what the driver holds: full avatar view, driver kind, driver name
    views: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: Path) -> "CliState":
        return cls(**json.loads(path.read_text()))

    def save(self, path: Path) -> None:
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True))
        tmp.replace(path)


class Session:
    """Everything a subcommand needs, rebuilt from the state directory."""

    def __init__(self, args: argparse.Namespace):
        self.dir = Path(args.state_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.state_path = self.dir / STATE_FILE
        if self.state_path.exists():
            self.state = CliState.load(self.state_path)
        else:
            backend = args.backend or ("transparent" if args.insecure_toy_group else None)
            params = _params(backend, args.insecure_toy_group, args.toy_order)
            self.state = CliState(
                "transparent" if params.is_transparent else "production",
                args.toy_order,
                cps._nonzero(random.SystemRandom(), params.q),
                args.authority_token or secrets.token_hex(16),
            )
        self.params = _params(self.state.backend, args.insecure_toy_group, self.state.toy_order)
        self.registry = Registry(
            self.params,
            cps.keypair_from_secret(self.params, self.state.idp_sk),
            ledger_path=args.ledger_path or self.dir / "ledger.bin",
            trusted_store_path=args.trusted_store_path or self.dir / "trusted.bin",
            authority_token=self.state.authority_token,
        )
        self.server = PlatformServer(self.params, self.registry)
        for aid_hex, enc in self.state.avatars.items():
            self.server.avatars[bytes.fromhex(aid_hex)] = Avatar.decode(self.params, bytes.fromhex(enc))
        for aid_hex, tok in self.state.tokens.items():
            self.server.tokens[bytes.fromhex(aid_hex)] = bytes.fromhex(tok)
        self.transport = make_transport(args.transport)

    def save(self) -> None:
        self.state.avatars = {aid.hex(): a.encode().hex() for aid, a in self.server.avatars.items()}
        self.state.tokens = {aid.hex(): t.hex() for aid, t in self.server.tokens.items()}
        self.state.save(self.state_path)

    def user(self, name: str) -> UserContext:
        try:
            u = self.state.users[name]
        except KeyError:
            raise SystemExit(f"unknown user {name!r}; run `register --name {name}` first") from None
        keys = cps.keypair_from_secret(self.params, u["sk"])
        mit = self.registry.get_mit(bytes.fromhex(u["sn"]))
        uid = UserId(u["rid"].encode(), u["mid"].encode())
        iris = biometric.enroll(u["iris_seed"])
        desc = describe_avatar(face=f"face-model:{name}".encode(), speech=f"voice-model:{name}".encode())
        return UserContext(uid, keys, mit, iris, desc)

    def proxy(self, name: str) -> ProxyContext:
        try:
            p = self.state.proxies[name]
        except KeyError:
            raise SystemExit(f"unknown proxy {name!r}; run `register --proxy --name {name}` first") from None
        return ProxyContext(cps.keypair_from_secret(self.params, p["sk"]), self.registry.get_mit(bytes.fromhex(p["sn"])))

    def avatar_context(self, aid: bytes) -> AvatarContext:
        rec = self.state.avatars.get(aid.hex())
        view = self.state.views.get(aid.hex())
        if rec is None or view is None:
            raise SystemExit(f"avatar {aid.decode()!r} is not driven; log in first")
        avatar = Avatar.decode(self.params, bytes.fromhex(view["avatar"]))
        if view["driver"] == "human":
            user = self.user(view["name"])
            return AvatarContext(avatar, user.keys, user)
        return AvatarContext(avatar, self.proxy(view["name"]).keys)

    def remember_view(self, avatar: Avatar, driver: str, name: str) -> None:
        self.state.views[avatar.aid.hex()] = {"avatar": avatar.encode().hex(), "driver": driver, "name": name}


def _params(backend: str | None, insecure: bool, toy_order: int) -> Params:
    return setup(backend=backend, insecure_toy_group=insecure, toy_order=toy_order)


def cmd_register(args, s: Session) -> int:
    pool = s.state.proxies if args.proxy else s.state.users
    if args.name in pool:
        print(f"{args.name} is already registered", file=sys.stderr)
        return 1
    keys = cps.keygen(s.params)
    seed = f"iris:{args.name}:{secrets.token_hex(8)}"
    mid = args.mid or f"{'proxy' if args.proxy else 'mid'}:{args.name}"
    uid = UserId((args.rid or f"rid:{args.name}").encode(), mid.encode())
    mit = s.registry.register_user(uid, keys.pk, biometric.enroll(seed), b"ai-proxy" if args.proxy else b"user")
    pool[args.name] = {"sk": keys.sk, "sn": mit.sn.hex(), "rid": uid.rid.decode(), "mid": uid.mid.decode(), "iris_seed": seed}
    s.save()
    print(json.dumps({"name": args.name, "sn": mit.sn.hex(), "mid": mid, "proxy": args.proxy}))
    return 0


def cmd_login(args, s: Session) -> int:
    user = s.user(args.name)
    aid = args.aid.encode()
    if aid not in s.server.avatars:
        s.server.register_avatar(user.sn, aid)
    avatar, token, _ = login(user, aid, s.server, s.transport)
    s.remember_view(avatar, "human", args.name)
    s.save()
    print(to_debug_json(avatar))
    return 0


def cmd_delegate(args, s: Session) -> int:
    ctx = s.avatar_context(args.aid.encode())
    if ctx.user is None:
        print("avatar is already driven by a proxy", file=sys.stderr)
        return 1
    avatar, *_ = delegate(ctx.user, ctx.avatar, s.proxy(args.proxy), s.server, s.transport)
    s.remember_view(avatar, "ai-proxy", args.proxy)
    s.save()
    print(to_debug_json(avatar))
    return 0


def cmd_interact(args, s: Session) -> int:
    a = s.avatar_context(args.aid.encode())
    b = s.avatar_context(args.peer.encode())
    result = mutual_auth(a, b, s.registry, s.transport)
    out = {"keys_match": result.keys_match, "session_id": result.initiator.session_id.hex()}
    if args.evidence_out:
        digest = bytes.fromhex(args.image_digest) if args.image_digest else secrets.token_bytes(32)
        Path(args.evidence_out).write_bytes(evidence_from(result.responder, digest).encode())
        out["evidence"] = str(args.evidence_out)
    print(json.dumps(out))
    return 0 if result.keys_match else 1


def cmd_trace(args, s: Session) -> int:
    evidence = Evidence.decode(s.params, Path(args.evidence).read_bytes())
    try:
        report = trace_detailed(evidence, s.registry, args.authority_token)
    except AccusationRejected as exc:
        print(json.dumps({"accepted": False, "reason": exc.code.name}))
        return 2
    print(
        json.dumps(
            {
                "accepted": True,
                "rid": report.user_id.rid.decode(errors="replace"),
                "mid": report.user_id.mid.decode(errors="replace"),
                "driver_type": report.driver_type.value,
                "mits_fetched": report.mits_fetched,
                "timings_ms": {k: round(v * 1000, 3) for k, v in report.timings.items()},
            }
        )
    )
    return 0


def cmd_secgames(args) -> int:
    if args.game in ("os-euf", "ps-euf"):
        params = setup(backend="transparent", insecure_toy_group=args.insecure_toy_group, toy_order=args.toy_order)
    else:
        backend = args.backend or ("transparent" if args.insecure_toy_group else None)
        params = setup(backend=backend, insecure_toy_group=args.insecure_toy_group, toy_order=args.toy_order)
    print(json.dumps(secgames.run_game(args.game, params, args.attempts, args.seed), sort_keys=True))
    return 0


def cmd_bench(args) -> int:
    backend = args.backend or ("transparent" if args.insecure_toy_group else None)
    params = setup(backend=backend, insecure_toy_group=args.insecure_toy_group, toy_order=args.toy_order)
    report = bench.run_suite(args.suite, params, args.batch, args.iris_delay)
    bench.emit_report(report, args.format, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--state-dir", default="avatrace-state")
    common.add_argument("--ledger-path", default=None)
    common.add_argument("--trusted-store-path", default=None)
    common.add_argument("--authority-token", default=None)
    common.add_argument("--transport", default="loopback", help="loopback or tcp:HOST:PORT")
    common.add_argument("--backend", choices=("production", "transparent"), default=None, help="default: $CPS_BACKEND")
    common.add_argument("--insecure-toy-group", action="store_true", help="allow the transparent test-only group")
    common.add_argument("--toy-order", type=int, default=BLS12_381_R)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="avatrace", description="Traceable avatar identities.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("register", parents=[common], help="register a user or AI proxy with the IdP")
    p.add_argument("--name", required=True)
    p.add_argument("--rid")
    p.add_argument("--mid")
    p.add_argument("--proxy", action="store_true")

    p = sub.add_parser("login", parents=[common], help="bring an avatar online as human-driven")
    p.add_argument("--name", required=True)
    p.add_argument("--aid", required=True)

    p = sub.add_parser("delegate", parents=[common], help="hand a logged-in avatar to an AI proxy")
    p.add_argument("--aid", required=True)
    p.add_argument("--proxy", required=True)

    p = sub.add_parser("interact", parents=[common], help="mutually authenticate two avatars")
    p.add_argument("--aid", required=True)
    p.add_argument("--peer", required=True)
    p.add_argument("--evidence-out")
    p.add_argument("--image-digest", help="hex digest of the interaction image")

    p = sub.add_parser("trace", parents=[common], help="trace evidence back to a real identity")
    p.add_argument("--evidence", required=True)

    p = sub.add_parser("secgames", parents=[common], help="run a security-game or forgery harness")
    p.add_argument("--game", choices=("os-euf", "ps-euf", "accuse1", "accuse2"), required=True)
    p.add_argument("--attempts", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("bench", parents=[common], help="operation counts, sizes and timings")
    p.add_argument("--suite", choices=("ops", "sizes", "timing", "protocols"), required=True)
    p.add_argument("--batch", type=int, default=20)
    p.add_argument("--format", choices=("table", "json-lines"), default="table")
    p.add_argument("--out", default=None)
    p.add_argument("--iris-delay", type=float, default=0.0, help="simulated iris capture time in seconds")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "secgames":
            return cmd_secgames(args)
        if args.command == "bench":
            return cmd_bench(args)
        session = Session(args)
        return {
            "register": cmd_register,
            "login": cmd_login,
            "delegate": cmd_delegate,
            "interact": cmd_interact,
            "trace": cmd_trace,
        }[args.command](args, session)
    except ProtocolAbort as exc:
        print(json.dumps({"error": "protocol aborted", "status": exc.code.name, "detail": exc.detail}), file=sys.stderr)
        return 2
    except (RegistryError, PermissionError, ValueError, InsecureGroupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
