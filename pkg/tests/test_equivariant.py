import itertools

import numpy as np
import pytest

from eqconv.equivariant import (
    EquivariantMap,
    GeneratorMap,
    check_equivariance,
    g_closure,
    generator_distance,
    lift_generator,
    restrict_to_generator,
)
from eqconv.errors import DecompositionMismatch, SizeMismatch
from eqconv.groups import (
    builtin_group,
    decompose,
    natural_action,
    product_action,
    regular_action,
    symmetric_group,
    translate,
    trivial_action,
    trivial_group,
)
from eqconv.signal import SampleSet

from .conftest import BUILTIN, SMALL_GROUPS
from .helpers import random_generator


def s3():
    A = natural_action(symmetric_group(3))
    return A, decompose(A)


def max_map(A):
    return EquivariantMap(lambda x: np.repeat(x.max(axis=-1, keepdims=True), A.size, axis=-1), A, A)


def test_restrict_examples(rng):
    A, D = s3()
    x = rng.normal(size=(5, 3))
    ident = EquivariantMap(lambda x: x, A, A)
    np.testing.assert_array_equal(restrict_to_generator(ident, D)(x), x[:, :1])
    const = EquivariantMap(lambda x: np.broadcast_to([2.0, 2.0, 2.0], x.shape).copy(), A, A)
    np.testing.assert_array_equal(restrict_to_generator(const, D)(x), np.full((5, 1), 2.0))
    gen = restrict_to_generator(max_map(A), D)
    np.testing.assert_array_equal(gen(x)[:, 0], [max(row) for row in x])


def test_restrict_mismatch():
    A, D = s3()
    other = decompose(regular_action(A.group))
    with pytest.raises(DecompositionMismatch):
        restrict_to_generator(EquivariantMap(lambda x: x, A, A), other)


def test_lift_of_first_coordinate_is_identity(rng):
    A, D = s3()
    F = lift_generator(GeneratorMap(lambda x: x[..., :1], D, D))
    X = rng.normal(size=(100, 3))
    # direct formula: F[x](t) = x(g_t . 0) = x(t)
    oracle = np.array([[x[A.act(int(D.section[t]), 0)] for t in range(3)] for x in X])
    np.testing.assert_array_equal(F(X), oracle)
    np.testing.assert_array_equal(F(X), X)


def test_lift_of_sum():
    A, D = s3()
    F = lift_generator(GeneratorMap(lambda x: x.sum(axis=-1, keepdims=True), D, D))
    np.testing.assert_allclose(F([1.0, 2.0, 4.0]), [7.0, 7.0, 7.0])
    assert check_equivariance(F) < 1e-12


def test_lift_trivial_group(rng):
    G = trivial_group()
    A = trivial_action(G, 4)
    D = decompose(A)
    assert D.base_space == (0, 1, 2, 3)
    fb = GeneratorMap(lambda x: np.sin(x) + x[..., ::-1], D, D)
    x = rng.normal(size=4)
    np.testing.assert_array_equal(lift_generator(fb)(x), fb(x))


def test_generator_output_checked():
    A, D = s3()
    with pytest.raises(SizeMismatch):
        GeneratorMap(lambda x: x, D, D)(np.zeros(3))


@pytest.mark.parametrize("name", list(SMALL_GROUPS))
def test_lifted_generators_are_equivariant(name, rng):
    G = SMALL_GROUPS[name]()
    nat = natural_action(G)
    for S, T in [(nat, nat), (regular_action(G), regular_action(G)), (product_action(nat, 2), nat),
                 (regular_action(G), nat)]:
        D_S, D_T = decompose(S), decompose(T)
        F = lift_generator(random_generator(D_S, D_T, rng))
        assert check_equivariance(F, trials=20, seed=1) < 1e-12


@pytest.mark.parametrize("name", list(SMALL_GROUPS))
def test_lift_restrict_roundtrip(name, rng):
    G = SMALL_GROUPS[name]()
    A = natural_action(G)
    D = decompose(A)
    F_B = random_generator(D, D, rng)
    X = rng.normal(size=(20, A.size))
    np.testing.assert_allclose(restrict_to_generator(lift_generator(F_B), D)(X), F_B(X), atol=1e-15)
    F = max_map(A)
    np.testing.assert_array_equal(lift_generator(restrict_to_generator(F, D))(X), F(X))


@pytest.mark.parametrize("name", ["S3", "D4"])
def test_section_independence_for_genuine_generators(name, rng):
    # any valid section (here: the largest g) gives the same lift
    G = builtin_group(name)
    A = natural_action(G)
    D = decompose(A)
    F_B = random_generator(D, D, rng)
    F = lift_generator(F_B)
    X = rng.normal(size=(10, A.size))
    for t in range(A.size):
        b = int(D.projection[t])
        g = max(g for g in G.elements if A.act(g, b) == t)
        j = D.base_space.index(b)
        alt = F_B(translate(G.inverse(g), X, A))[:, j]
        np.testing.assert_allclose(F(X)[:, t], alt, atol=1e-14)


def test_lift_of_non_invariant_generator_is_not_equivariant():
    # a generator that is not stabilizer-invariant cannot come from an equivariant map
    A, D = s3()
    F = lift_generator(GeneratorMap(lambda x: x[..., 1:2], D, D))
    assert check_equivariance(F) > 0.1


def test_check_equivariance_examples():
    A, _ = s3()
    shifted = EquivariantMap(lambda x: x + np.array([1.0, 0.0, 0.0]), A, A)
    assert check_equivariance(shifted) > 0
    T = trivial_action(trivial_group(), 3)
    anything = EquivariantMap(lambda x: x**2 + x[..., ::-1], T, T)
    assert check_equivariance(anything) == 0


def test_check_equivariance_exhaustive_in_g():
    # equivariant for rotations only: caught once reflections are included
    G = builtin_group("D4")
    A = natural_action(G)
    F = EquivariantMap(lambda x: np.roll(x, 1, axis=-1) - x, A, A)
    assert check_equivariance(F, elements=range(4)) < 1e-12
    assert check_equivariance(F) > 0.1


def test_g_closure():
    A = natural_action(builtin_group("Z4"))
    X = np.array([[1.0, 2.0, 3.0, 4.0], [0.0, 0.0, 0.0, 0.0]])
    C = g_closure(X, A)
    assert C.shape == (5, 4)
    assert {tuple(r) for r in C} == {(1, 2, 3, 4), (4, 1, 2, 3), (3, 4, 1, 2), (2, 3, 4, 1), (0, 0, 0, 0)}


def test_generator_distance_examples(rng):
    A, D = s3()
    F = lift_generator(random_generator(D, D, rng))
    E = SampleSet(g_closure(rng.uniform(size=(10, 3)), A))
    assert generator_distance(F, F, E, D) == (0.0, 0.0)
    c = 0.375
    F2 = lift_generator(GeneratorMap(lambda x: F(x)[..., :1] + c, D, D))
    full, gen = generator_distance(F, F2, E, D)
    assert full == pytest.approx(c, abs=1e-15) and gen == pytest.approx(c, abs=1e-15)


@pytest.mark.parametrize("name", BUILTIN)
def test_isometry_on_closed_samples(name, rng):
    G = builtin_group(name)
    A = natural_action(G)
    D = decompose(A)
    E = g_closure(rng.uniform(size=(8, A.size)), A)
    for _ in range(5):
        F, F2 = (lift_generator(random_generator(D, D, rng)) for _ in range(2))
        full, gen = generator_distance(F, F2, E, D)
        assert abs(full - gen) <= 1e-12
