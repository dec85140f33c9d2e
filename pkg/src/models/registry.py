from typing import List, Tuple, Dict
from pydantic import BaseModel, Field, ConfigDict, model_validator

UNLABELED = "Unlabeled"

RGB = Tuple[int, int, int]


class ClassEntry(BaseModel):
    """One semantic class: its name and palette colour."""
    name: str = Field(..., min_length=1, description="Class name, unique within a registry.")
    rgb: RGB = Field(..., description="Palette colour, three integers in 0-255.")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_rgb_range(self):
        if any(c < 0 or c > 255 for c in self.rgb):
            raise ValueError(f"rgb code {self.rgb} of class '{self.name}' outside 0-255")
        return self


class ClassRegistry(BaseModel):
    """Ordered class list; the index of an entry is its one-hot channel."""
    name: str = Field("custom", description="Registry identifier, e.g. 'common' or 'viper'.")
    entries: List[ClassEntry] = Field(..., min_length=1)

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "name": "common",
                "entries": [
                    {"name": "Unlabeled", "rgb": [0, 0, 0]},
                    {"name": "Road", "rgb": [128, 64, 128]},
                ],
            }
        },
    )

    @model_validator(mode="after")
    def _check_invariants(self):
        names = [e.name for e in self.entries]
        codes = [e.rgb for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError(f"registry '{self.name}': class names are not distinct")
        if len(set(codes)) != len(codes):
            raise ValueError(f"registry '{self.name}': rgb codes are not distinct")
        first = self.entries[0]
        if first.name != UNLABELED or tuple(first.rgb) != (0, 0, 0):
            raise ValueError(f"registry '{self.name}': entry 0 must be {UNLABELED} with rgb [0, 0, 0]")
        return self

    @classmethod
    def from_pairs(cls, name: str, pairs: List[Tuple[str, RGB]]) -> "ClassRegistry":
        return cls(name=name, entries=[ClassEntry(name=n, rgb=tuple(c)) for n, c in pairs])

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> List[str]:
        return [e.name for e in self.entries]

    @property
    def rgb_codes(self) -> List[RGB]:
        return [tuple(e.rgb) for e in self.entries]

    def index_of(self, class_name: str) -> int:
        try:
            return self.names.index(class_name)
        except ValueError:
            raise KeyError(f"class '{class_name}' not in registry '{self.name}'") from None

    def code_to_index(self) -> Dict[RGB, int]:
        return {code: i for i, code in enumerate(self.rgb_codes)}
