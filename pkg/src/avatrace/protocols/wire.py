"""Messages, framing, transcripts and transports.

Wire format of one message::

    session_id (16) || step (1) || length (4, big-endian) || body

A transcript file is a sequence of framed messages followed by one terminal
status byte.
"""

from __future__ import annotations

import enum
import logging
import socket
import struct
import threading
from dataclasses import dataclass, field

from ..codec import DecodeError

log = logging.getLogger(__name__)

HEADER = struct.Struct(">16sBI")
MAX_BODY = 1 << 20


class Step(enum.IntEnum):
    LOGIN_CLAIM = 0x10
    LOGIN_CHALLENGE = 0x11
    LOGIN_RESPONSE = 0x12
    LOGIN_ACCEPT = 0x13

    DELEG_CLAIM = 0x20
    DELEG_CHALLENGE = 0x21
    DELEG_RESPONSE = 0x22
    DELEG_ACK = 0x23
    DELEG_SUBMIT = 0x24
    DELEG_TRANSFER = 0x25

    MA_CLAIM = 0x30
    MA_CHALLENGE = 0x31
    MA_RESPONSE = 0x32
    MA_RESPONSE_B = 0x33
    MA_KEY = 0x34
    MA_DONE = 0x35

    ABORT = 0x7F


# Which end of a session sends each step.
INITIATOR_STEPS = {
    Step.LOGIN_CLAIM,
    Step.LOGIN_RESPONSE,
    Step.DELEG_CLAIM,
    Step.DELEG_RESPONSE,
    Step.DELEG_SUBMIT,
    Step.MA_CLAIM,
    Step.MA_RESPONSE,
    Step.MA_KEY,
}


class Status(enum.IntEnum):
    OK = 0
    UNKNOWN_SN = 1
    MIT_INVALID = 2
    VID_INVALID = 3
    CHALLENGE_MISMATCH = 4
    IRIS_MISMATCH = 5
    PID_INVALID = 6
    UNKNOWN_AVATAR = 7
    OUT_OF_ORDER = 8
    SESSION_REVOKED = 9
    DESCRIPTION_MISMATCH = 10
    MALFORMED = 11
    AVATAR_BUSY = 12
    BINDING_MISMATCH = 13
    PEER_ABORTED = 14
    INCOMPLETE = 0xFF


class ProtocolAbort(Exception):
    def __init__(self, code: Status, detail: str = ""):
        super().__init__(f"{code.name}: {detail}" if detail else code.name)
        self.code = code
        self.detail = detail


@dataclass(frozen=True)
class Message:
    session_id: bytes
    step: Step
    body: bytes = b""

    def __post_init__(self):
        if len(self.session_id) != 16:
            raise ValueError("session_id must be 16 bytes")

    def encode(self) -> bytes:
        return HEADER.pack(self.session_id, int(self.step), len(self.body)) + self.body

    @classmethod
    def decode(cls, data: bytes) -> "Message":
        msg, used = cls.decode_prefix(data)
        if used != len(data):
            raise DecodeError("trailing bytes after message")
        return msg

    @classmethod
    def decode_prefix(cls, data: bytes, offset: int = 0) -> tuple["Message", int]:
        if len(data) - offset < HEADER.size:
            raise DecodeError("truncated message header")
        sid, step, n = HEADER.unpack_from(data, offset)
        if n > MAX_BODY:
            raise DecodeError("message body too large")
        end = offset + HEADER.size + n
        if end > len(data):
            raise DecodeError("truncated message body")
        try:
            step = Step(step)
        except ValueError as exc:
            raise DecodeError(f"unknown step 0x{step:02x}") from exc
        return cls(sid, step, bytes(data[offset + HEADER.size : end])), end

    @property
    def direction(self) -> str:
        return "initiator" if self.step in INITIATOR_STEPS else "responder"


def abort_message(session_id: bytes, code: Status) -> Message:
    return Message(session_id, Step.ABORT, bytes([int(code)]))


@dataclass
class ProtocolTranscript:
    messages: list[Message] = field(default_factory=list)
    status: Status = Status.INCOMPLETE
    # Live verification decisions as (label, accepted); not part of the file format.
    decisions: list[tuple[str, bool]] = field(default_factory=list)

    def record(self, msg: Message) -> None:
        self.messages.append(msg)

    def entries(self) -> list[tuple[str, Message]]:
        return [(m.direction, m) for m in self.messages]

    def find(self, step: Step) -> Message | None:
        for m in self.messages:
            if m.step == step:
                return m
        return None

    def to_bytes(self) -> bytes:
        return b"".join(m.encode() for m in self.messages) + bytes([int(self.status)])

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProtocolTranscript":
        if not data:
            raise DecodeError("empty transcript")
        msgs, pos = [], 0
        while pos < len(data) - 1:
            m, pos = Message.decode_prefix(data, pos)
            msgs.append(m)
        if pos != len(data) - 1:
            raise DecodeError("transcript missing status byte")
        try:
            status = Status(data[-1])
        except ValueError as exc:
            raise DecodeError("unknown transcript status") from exc
        return cls(msgs, status)


class Party:
    """One end of a two-party session, driven message by message.

    Subclasses implement ``on_<step name lowercase>`` handlers; a handler returns
    the next outgoing message (or None) and raises ProtocolAbort to stop.
    """

    expects: tuple[Step, ...] = ()

    def __init__(self, session_id: bytes | None = None):
        # Responders adopt the session id of the first message they accept.
        self.session_id = session_id
        self.transcript = ProtocolTranscript()
        self.finished = False

    def start(self) -> Message | None:
        return None

    def send(self, step: Step, body: bytes = b"") -> Message:
        msg = Message(self.session_id, step, body)
        self.transcript.record(msg)
        return msg

    def fail(self, code: Status) -> Message:
        self.transcript.status = code
        self.finished = True
        return abort_message(self.session_id, code)

    def complete(self) -> None:
        self.transcript.status = Status.OK
        self.finished = True

    def decide(self, label: str, ok: bool, code: Status) -> None:
        self.transcript.decisions.append((label, ok))
        if not ok:
            raise ProtocolAbort(code, label)

    def handle(self, msg: Message) -> Message | None:
        if msg.step == Step.ABORT:
            code = Status(msg.body[0]) if msg.body and msg.body[0] in Status._value2member_map_ else Status.PEER_ABORTED
            self.transcript.status = code
            self.finished = True
            return None
        if self.finished:
            return self.fail(Status.OUT_OF_ORDER)
        if self.session_id is None:
            self.session_id = msg.session_id
        if msg.session_id != self.session_id or not self.expects or msg.step != self.expects[0]:
            return self.fail(Status.OUT_OF_ORDER)
        self.transcript.record(msg)
        self.expects = self.expects[1:]
        try:
            return getattr(self, "on_" + msg.step.name.lower())(msg.body)
        except ProtocolAbort as exc:
            log.debug("%s aborted: %s", type(self).__name__, exc)
            return self.fail(exc.code)
        except (DecodeError, ValueError) as exc:
            log.debug("%s rejected malformed input: %s", type(self).__name__, exc)
            return self.fail(Status.MALFORMED)

    @property
    def status(self) -> Status:
        return self.transcript.status


def raise_for_status(*parties: Party) -> None:
    # An aborting party's code is echoed to its peer, so the first non-OK status is the cause.
    for p in parties:
        if p.status != Status.OK:
            raise ProtocolAbort(p.status)


class LoopbackTransport:
    """In-process delivery; every message still crosses the wire encoding."""

    def run(self, initiator: Party, responder: Party) -> None:
        msg = initiator.start()
        peers = (responder, initiator)
        turn = 0
        while msg is not None:
            msg = Message.decode(msg.encode())
            msg = peers[turn].handle(msg)
            turn ^= 1


def _recv_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return bytes(buf)


def recv_message(sock: socket.socket) -> Message | None:
    header = _recv_exact(sock, HEADER.size)
    if header is None:
        return None
    _, _, n = HEADER.unpack(header)
    if n > MAX_BODY:
        raise DecodeError("message body too large")
    body = _recv_exact(sock, n) if n else b""
    if body is None:
        raise DecodeError("connection closed mid-message")
    return Message.decode(header + body)


def _pump(sock: socket.socket, party: Party, first: Message | None) -> None:
    if first is not None:
        sock.sendall(first.encode())
    while not party.finished:
        msg = recv_message(sock)
        if msg is None:
            break
        reply = party.handle(msg)
        if reply is not None:
            sock.sendall(reply.encode())


class TcpTransport:
    """Runs the responder behind a listening socket and the initiator as its client."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, timeout: float = 30.0):
        self.host, self.port, self.timeout = host, port, timeout

    @classmethod
    def from_spec(cls, spec: str) -> "TcpTransport":
        host, _, port = spec.rpartition(":")
        return cls(host or "127.0.0.1", int(port))

    def run(self, initiator: Party, responder: Party) -> None:
        errors: list[BaseException] = []
        with socket.create_server((self.host, self.port)) as server:
            server.settimeout(self.timeout)
            addr = server.getsockname()

            def serve():
                try:
                    conn, _ = server.accept()
                    with conn:
                        conn.settimeout(self.timeout)
                        _pump(conn, responder, None)
                except BaseException as exc:  # surfaced to the caller below
                    errors.append(exc)

            t = threading.Thread(target=serve, daemon=True)
            t.start()
            with socket.create_connection(addr[:2], timeout=self.timeout) as client:
                _pump(client, initiator, initiator.start())
                client.shutdown(socket.SHUT_WR)
            t.join(self.timeout)
        if errors:
            raise errors[0]


def make_transport(spec: str | None):
    if spec is None or spec == "loopback":
        return LoopbackTransport()
    if spec.startswith("tcp:"):
        return TcpTransport.from_spec(spec[4:])
    raise ValueError(f"unknown transport {spec!r}")
