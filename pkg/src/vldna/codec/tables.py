"""Construction and loading of the shipped codebook tables.

``blawat_v1.txt``: 256 lines, line i is the 5-base codeword of byte i.
``grass_v1.txt``: 47 lines, line d is the codon of base-47 digit d.

Run ``python -m vldna.codec.tables`` to regenerate both files.
"""

from __future__ import annotations

import itertools
from importlib import resources
from pathlib import Path

ALPHABET = "ACGT"
BLAWAT_FILE = "blawat_v1.txt"
GRASS_FILE = "grass_v1.txt"


def _max_run(word: str) -> int:
    return max(len(list(g)) for _, g in itertools.groupby(word))


def build_blawat() -> list[str]:
    # 5-mers whose first and last base pairs differ and that hold no run of
    # three; concatenations of such words never contain a run longer than two.
    pool = ["".join(w) for w in itertools.product(ALPHABET, repeat=5)
            if w[0] != w[1] and w[3] != w[4] and _max_run("".join(w)) < 3]
    assert len(pool) == 540
    return [pool[i * len(pool) // 256] for i in range(256)]


def build_grass() -> list[str]:
    # the 36 codons without adjacent repeats plus 11 of the 12 "xyy" codons;
    # no codon starts with a repeat, so runs across codons stay below four
    clean = ["".join(c) for c in itertools.product(ALPHABET, repeat=3) if c[0] != c[1] and c[1] != c[2]]
    tails = ["".join(c) for c in itertools.product(ALPHABET, repeat=3) if c[0] != c[1] and c[1] == c[2]]
    codons = sorted(clean + tails[:11])
    assert len(codons) == 47
    return codons


def load(name: str) -> list[str]:
    text = resources.files("vldna.codec").joinpath("data", name).read_text()
    return [line.strip() for line in text.splitlines() if line.strip()]


def write_tables(directory: Path | None = None) -> None:
    directory = Path(directory or Path(__file__).parent / "data")
    directory.mkdir(parents=True, exist_ok=True)
    (directory / BLAWAT_FILE).write_text("\n".join(build_blawat()) + "\n")
    (directory / GRASS_FILE).write_text("\n".join(build_grass()) + "\n")


if __name__ == "__main__":
    write_tables()
