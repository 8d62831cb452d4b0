# src/errors.py
from __future__ import annotations

# Códigos de saída do CLI (0 = ok/aceito, 1 = rejeitado)
EXIT_OK = 0
EXIT_REJECT = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PROTOCOL = 4


class ZkpError(Exception):
    """Raiz de todos os erros do toolkit. `exit_code` é usado pelo CLI."""
    exit_code: int = EXIT_PROTOCOL


class ConfigError(ZkpError, ValueError):
    exit_code = EXIT_USAGE


# ---------------------------------------------------------------------
# Corpo finito F_p
# ---------------------------------------------------------------------
class FieldError(ZkpError, ValueError):
    exit_code = EXIT_USAGE


class NotPrime(FieldError):
    pass


class TooSmall(FieldError):
    pass


class ModulusTooLarge(FieldError):
    pass


class ModulusMismatch(FieldError):
    pass


class ZeroInverse(FieldError, ZeroDivisionError):
    pass


# ---------------------------------------------------------------------
# Matrizes / polinômios
# ---------------------------------------------------------------------
class MatrixError(ZkpError, ValueError):
    exit_code = EXIT_USAGE


class DimensionMismatch(MatrixError):
    pass


class Singular(MatrixError):
    pass


class ModulusTooSmall(MatrixError):
    pass


class FieldTooSmall(MatrixError):
    pass


# ---------------------------------------------------------------------
# Chaves e artefatos
# ---------------------------------------------------------------------
class FingerprintMismatch(ZkpError):
    exit_code = EXIT_PROTOCOL


class ArtifactIOError(ZkpError, OSError):
    exit_code = EXIT_IO


# ---------------------------------------------------------------------
# Oráculo GSDP
# ---------------------------------------------------------------------
class EnumerationTooLarge(ZkpError):
    exit_code = EXIT_USAGE


class NoSolution(ZkpError):
    exit_code = EXIT_USAGE


# ---------------------------------------------------------------------
# Wire
# ---------------------------------------------------------------------
class WireError(ZkpError, ValueError):
    exit_code = EXIT_PROTOCOL


class BadLength(WireError):
    pass


class OutOfRangeElement(WireError):
    pass


class BadMagic(WireError):
    pass


class BadVersion(WireError):
    pass


class UnknownType(WireError):
    pass


class PayloadTooLarge(WireError):
    pass


class Truncated(WireError):
    pass


class MalformedPayload(WireError):
    pass


# ---------------------------------------------------------------------
# Protocolo / rede
# ---------------------------------------------------------------------
class ProtocolError(ZkpError):
    exit_code = EXIT_PROTOCOL


class SingularWitness(ProtocolError):
    pass


class SingularChallenge(ProtocolError):
    pass


class SingularResponse(ProtocolError):
    pass


class ProtocolViolation(ProtocolError):
    pass


class RemoteError(ProtocolError):
    """Frame ERROR recebido do peer."""

    def __init__(self, code: int, message: str = ""):
        super().__init__(f"peer respondeu ERROR 0x{code:02x}: {message}")
        self.code = code
        self.remote_message = message


class PeerTimeout(ProtocolError):
    pass


class ConnectionFailed(ProtocolError):
    pass
