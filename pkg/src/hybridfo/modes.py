"""Battery operating modes.

The plant runs in exactly one mode per scenario; switching between them
online is out of scope.
"""

import enum


class Mode(enum.Enum):
    CHARGING = "charge"
    DISCHARGING = "discharge"

    @classmethod
    def from_string(cls, name: str) -> "Mode":
        for mode in cls:
            if mode.value == name:
                return mode
        valid = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown battery mode {name!r} (expected one of: {valid})")
