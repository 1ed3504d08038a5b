"""Configuration-diagonal observables: Wilson loops and lines of Z_N phases."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ggpeps.lattice import LoopPath, PathStep, TorusLattice, ZN, plaquette_path, winding_line_path


@dataclass(frozen=True)
class ObservableSpec:
    """A closed loop, optionally averaged over all lattice translations of it.

    The translation average estimates the same expectation value as the single
    loop in a translation-invariant state, with smaller variance.
    """

    name: str
    path: LoopPath
    translation_average: bool = False

    def bind(self, lattice: TorusLattice) -> BoundObservable:
        if not self.path.is_closed(lattice):
            raise ValueError(f"observable {self.name!r}: path is not closed")
        copies = [self.path]
        if self.translation_average:
            copies = [translate_path(self.path, lattice, site) for site in lattice.vertices()]
        links, seen = [], set()
        for path in copies:
            idx = path.link_indices(lattice)
            key = tuple(sorted(idx))
            if key not in seen:
                seen.add(key)
                links.append(idx)
        return BoundObservable(self.name, np.array(links, dtype=int).reshape(len(links), len(self.path)),
                               self.path.orientations())


@dataclass(frozen=True)
class BoundObservable:
    """Loops resolved to link indices: ``links`` is (copies, path length)."""

    name: str
    links: np.ndarray
    orientations: np.ndarray

    def charges(self, config, group: ZN) -> np.ndarray:
        """Exact integer charge of every copy, mod N."""
        if self.links.shape[1] == 0:
            return np.zeros(len(self.links), dtype=np.int64)
        return (np.asarray(config)[self.links] @ self.orientations) % group.order

    def charge(self, config, group: ZN) -> int:
        """Charge of the first copy."""
        return int(self.charges(config, group)[0])

    def __call__(self, config, group: ZN) -> complex:
        return complex(np.mean(group.phase(self.charges(config, group))))


def translate_path(path: LoopPath, lattice: TorusLattice, shift) -> LoopPath:
    return LoopPath(tuple(
        PathStep(((s.site[0] + shift[0]) % lattice.lx, (s.site[1] + shift[1]) % lattice.ly), s.direction,
                 s.orientation)
        for s in path))


def evaluate_loop(config, spec: ObservableSpec, lattice: TorusLattice, group: ZN) -> complex:
    """Product of ``exp(2 pi i sigma q / N)`` along the path; total charge is summed exactly first."""
    return spec.bind(lattice)(config, group)


def constant_observable() -> ObservableSpec:
    """``F = 1``: the empty loop."""
    return ObservableSpec("one", LoopPath(()))


def standard_observables(lattice: TorusLattice) -> list[ObservableSpec]:
    return [
        ObservableSpec("W11", plaquette_path(lattice, (0, 0))),
        ObservableSpec("WL", winding_line_path(lattice, 0)),
    ]


def averaged_observables(lattice: TorusLattice) -> list[ObservableSpec]:
    return [
        ObservableSpec("W11_avg", plaquette_path(lattice, (0, 0)), translation_average=True),
        ObservableSpec("WL_avg", winding_line_path(lattice, 0), translation_average=True),
    ]


def observables_by_name(lattice: TorusLattice, names) -> list[ObservableSpec]:
    table = {spec.name: spec for spec in standard_observables(lattice) + averaged_observables(lattice)}
    table["one"] = constant_observable()
    try:
        return [table[name] for name in names]
    except KeyError as exc:
        raise ValueError(f"unknown observable {exc.args[0]!r}; choose from {sorted(table)}") from None
