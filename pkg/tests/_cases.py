"""Shared seeds and the six reference transformations on the oscillator."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from darboux_forge.darboux import DarbouxPair, second_order_transform
from darboux_forge.potential import Grid, make_builtin_potential
from darboux_forge.regularity import Selector, TransformSpec, build_transformation_function
from darboux_forge.spectrum import Spectrum, compute_spectrum
from darboux_forge.susy import SpectralOutcome, predict_outcome

GRID = Grid(-10.0, 10.0, 20001)
SEED_KMAX = 20
PARTNER_KMAX = 8

# criterion number -> one-line verdict, printed at the end of a pytest run
ACCEPTANCE_LINES: dict = {}

CASES = {
    "A": (1.5, 2.5, "target_nodes:2", "target_nodes:1"),
    "B": (1.5, 2.5, "target_nodes:2", "pure_left"),
    "C": (1.5, 3.0, "target_nodes:2", "eigenstate"),
    "D": (1.0, 2.5, "eigenstate", "target_nodes:1"),
    "E": (1.0, 2.5, "eigenstate", "pure_left"),
    "F": (1.0, 3.0, "eigenstate", "eigenstate"),
}


@dataclass(frozen=True, eq=False)
class Case:
    name: str
    spec: TransformSpec
    pair: DarbouxPair
    outcome: SpectralOutcome
    partner: Spectrum


@lru_cache(maxsize=None)
def oscillator():
    return make_builtin_potential("harmonic", (1.0,))


@lru_cache(maxsize=None)
def seed_spectrum() -> Spectrum:
    return compute_spectrum(oscillator(), SEED_KMAX, GRID)


@lru_cache(maxsize=None)
def case(name: str) -> Case:
    a1, a2, s1, s2 = CASES[name]
    V, s0 = oscillator(), seed_spectrum()
    spec = TransformSpec(0, a1, a2, Selector.parse(s1), Selector.parse(s2))
    spec.validate(s0)
    u1 = build_transformation_function(V, a1, spec.u1_selector, GRID, s0)
    u2 = build_transformation_function(V, a2, spec.u2_selector, GRID, s0)
    pair = second_order_transform(V, u1, u2)
    outcome = predict_outcome(spec, u1, u2, s0)
    partner = compute_spectrum(pair.V2_potential, PARTNER_KMAX, GRID)
    return Case(name, spec, pair, outcome, partner)


def krein() -> Case:
    return case("F")


def hermite_ground(x: np.ndarray) -> np.ndarray:
    return np.pi ** -0.25 * np.exp(-x * x / 2)
