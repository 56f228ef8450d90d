from __future__ import annotations

import enum


class Model(enum.IntEnum):
    """Motility models. The integer values are the kernel's model codes."""

    ABP = 0
    RTP = 1
    CHIRAL_ABP = 2
    PBP = 3

    @classmethod
    def parse(cls, value: "Model | str") -> "Model":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper().replace("-", "_").replace(" ", "_")
        aliases = {"CHIRAL": "CHIRAL_ABP", "CABP": "CHIRAL_ABP"}
        key = aliases.get(key, key)
        try:
            return cls[key]
        except KeyError:
            names = ", ".join(m.name for m in cls)
            raise ValueError(f"unknown model {value!r}; expected one of {names}") from None

    def __str__(self):
        return self.name
