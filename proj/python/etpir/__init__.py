"""Python access to the eavesdropper-secure private retrieval library."""

import json
from fractions import Fraction

from . import _etpir
from ._etpir import DEFAULT_MODULUS, InvalidParams, ProtocolError, random_messages

__all__ = [
    "DEFAULT_MODULUS",
    "InvalidParams",
    "ProtocolError",
    "audit",
    "capacity",
    "cli",
    "counts",
    "random_messages",
    "retrieve",
    "rho_min",
]


def capacity(K, N, T, E):
    return Fraction(_etpir.capacity(K, N, T, E))


def rho_min(K, N, T, E):
    return Fraction(_etpir.rho_min(K, N, T, E))


def counts(K, N, T, E, q=DEFAULT_MODULUS):
    return json.loads(_etpir.counts_json(K, N, T, E, q))


def audit(K, N, T, E, q=DEFAULT_MODULUS, seed=1, trials=100, retry=False):
    return json.loads(_etpir.audit_json(K, N, T, E, q, seed, trials, retry))


def retrieve(K, N, T, E, q, messages, desired, seed=1, tcp=False, retry=False):
    """Runs one retrieval against N servers; the message is None on a decode failure."""
    message, downloads, sent, received = _etpir.retrieve(K, N, T, E, q, messages, desired, seed, tcp, retry)
    return {"message": message, "downloads": downloads, "bytes_sent": sent, "bytes_received": received}


def cli(*args):
    """Runs the command line tool in process; returns (exit code, stdout, stderr)."""
    return _etpir.cli([str(a) for a in args])
