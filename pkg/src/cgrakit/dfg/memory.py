"""Banked scratchpad memory images."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from cgrakit.errors import OutOfBoundsAccess, SchemaError


@dataclass
class MemoryImage:
    word_width: int
    banks: list[list[int]]

    @classmethod
    def zeros(cls, word_width: int, depths: list[int]) -> MemoryImage:
        return cls(word_width, [[0] * d for d in depths])

    @property
    def mask(self) -> int:
        return (1 << self.word_width) - 1

    def copy(self) -> MemoryImage:
        return MemoryImage(self.word_width, [list(b) for b in self.banks])

    def read(self, bank: int, addr: int) -> int:
        if not 0 <= bank < len(self.banks) or not 0 <= addr < len(self.banks[bank]):
            raise OutOfBoundsAccess(f"read bank {bank} addr {addr}")
        return self.banks[bank][addr]

    def write(self, bank: int, addr: int, value: int) -> None:
        if not 0 <= bank < len(self.banks) or not 0 <= addr < len(self.banks[bank]):
            raise OutOfBoundsAccess(f"write bank {bank} addr {addr}")
        self.banks[bank][addr] = value & self.mask

    def diff(self, other: MemoryImage, limit: int | None = None) -> list[tuple[int, int, int, int]]:
        """(bank, addr, self value, other value) for every differing word."""
        out = []
        for b, (mine, theirs) in enumerate(zip(self.banks, other.banks)):
            for a, (x, y) in enumerate(zip(mine, theirs)):
                if x != y:
                    out.append((b, a, x, y))
                    if limit is not None and len(out) >= limit:
                        return out
        return out

    def hex_lines(self, bank: int) -> str:
        digits = (self.word_width + 3) // 4
        return "".join(f"{w:0{digits}x}\n" for w in self.banks[bank])

    def save(self, directory: str | Path, prefix: str = "bank") -> list[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for b in range(len(self.banks)):
            p = directory / f"{prefix}{b}.hex"
            p.write_text(self.hex_lines(b))
            paths.append(p)
        return paths

    @classmethod
    def load(cls, paths: list[str | Path], word_width: int) -> MemoryImage:
        banks = []
        for p in paths:
            try:
                banks.append([int(line, 16) for line in Path(p).read_text().split()])
            except ValueError as exc:
                raise SchemaError(f"{p}: bad hex word") from exc
        return cls(word_width, banks)
