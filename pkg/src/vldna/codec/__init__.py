"""Bit/base codecs and the Reed-Solomon outer code."""

from __future__ import annotations

import enum
from functools import lru_cache

from ..seqcore import DnaSequence
from .blawat import BlawatCodec
from .ecc import RS_255_239, EccParams, UncorrectableBlock, ecc_decode, ecc_encode, ecc_length
from .grass import GrassCodec
from .randomize import keystream, payload_seed, randomize, splitmix64
from .rotation import RotationCodec


class CodecId(str, enum.Enum):
    ROTATION = "rotation"
    BLAWAT = "blawat"
    GRASS = "grass"


@lru_cache(maxsize=None)
def get_codec(codec: CodecId | str):
    codec = CodecId(codec)
    return {CodecId.ROTATION: RotationCodec, CodecId.BLAWAT: BlawatCodec,
            CodecId.GRASS: GrassCodec}[codec]()


def encode(data: bytes, codec: CodecId | str) -> DnaSequence:
    return get_codec(codec).encode(data)


def decode(seq: DnaSequence, codec: CodecId | str) -> bytes:
    return get_codec(codec).decode(seq)


def nominal_density(codec: CodecId | str) -> float:
    return get_codec(codec).nominal_density


__all__ = [
    "CodecId", "EccParams", "RS_255_239", "UncorrectableBlock", "decode", "ecc_decode", "ecc_encode",
    "ecc_length", "encode", "get_codec", "keystream", "nominal_density", "payload_seed", "randomize",
    "splitmix64",
]
