from .common import AvatarContext, NonceTable, PlatformServer, ProxyContext, UserContext
from .delegation import delegate
from .login import login
from .mutual import MutualResult, mutual_auth
from .tracing import AccusationRejected, Evidence, TraceReport, evidence_from, replay_transcript, trace, trace_detailed
from .wire import LoopbackTransport, Message, ProtocolAbort, ProtocolTranscript, Status, Step, TcpTransport, make_transport

__all__ = [
    "AccusationRejected",
    "AvatarContext",
    "Evidence",
    "LoopbackTransport",
    "Message",
    "MutualResult",
    "NonceTable",
    "PlatformServer",
    "ProtocolAbort",
    "ProtocolTranscript",
    "ProxyContext",
    "Status",
    "Step",
    "TcpTransport",
    "TraceReport",
    "UserContext",
    "delegate",
    "evidence_from",
    "login",
    "make_transport",
    "mutual_auth",
    "replay_transcript",
    "trace",
    "trace_detailed",
]
