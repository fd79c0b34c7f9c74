"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class MaskShardsError(Exception):
    """Base class for all package errors."""


class ParameterError(MaskShardsError, ValueError):
    """Invalid protocol or chain parameters."""


class EpochError(MaskShardsError):
    """Values from different epochs were combined."""


class KeeperStateError(MaskShardsError):
    """A keeper secret was used after being erased or rotated away."""


class IntegrityError(MaskShardsError):
    """Decrypted shards do not match their published digests.

    ``results`` holds one boolean per shard (True = digest matched).
    """

    def __init__(self, message: str, results: list[bool]):
        super().__init__(message)
        self.results = results

    @property
    def failed(self) -> list[int]:
        """1-based indices of the shards whose digest did not match."""
        return [i for i, ok in enumerate(self.results, start=1) if not ok]


class DecodeError(MaskShardsError, ValueError):
    """Malformed serialized data."""


class TruncationError(DecodeError):
    def __init__(self, offset: int, needed: int, available: int):
        super().__init__(
            f"truncated input at offset {offset}: need {needed} bytes, {available} available"
        )
        self.offset = offset


class VersionError(DecodeError):
    """Unknown format version or type tag."""


class ElementDecodeError(DecodeError):
    """Bytes do not encode a valid group element."""
