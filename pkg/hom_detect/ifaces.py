from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from hom_detect.optics import ModeLabel


class ElementIface(ABC):
    """Linear-optical element acting on single-photon modes."""

    kind: str
    name: str

    @property
    @abstractmethod
    def input_paths(self) -> tuple[str, ...]:
        ...

    @property
    def output_paths(self) -> tuple[str, ...]:
        return self.input_paths

    @abstractmethod
    def mode_map(self, label: 'ModeLabel') -> list[tuple['ModeLabel', complex]]:
        """Image of the creation operator of ``label``, modes on other paths map to themselves."""

    @abstractmethod
    def to_record(self) -> dict[str, Any]:
        ...

    def __repr__(self) -> str:
        return f'{self.__class__.__name__}<{self.name}>'
