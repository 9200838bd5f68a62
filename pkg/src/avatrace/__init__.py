"""Traceable avatars: chameleon proxy signatures, identity tokens and the
login / delegation / mutual-authentication / tracing protocols built on them."""

from .bilinear import Params, hash_to_group, pair, setup
from .cps import ChameleonTuple, KeyPair, PublicKey, dgen, keygen, psig, pver

__version__ = "0.1.0"

__all__ = [
    "ChameleonTuple",
    "KeyPair",
    "Params",
    "PublicKey",
    "dgen",
    "hash_to_group",
    "keygen",
    "pair",
    "psig",
    "pver",
    "setup",
]
