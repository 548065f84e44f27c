"""Shared random constructions for tests."""

import numpy as np

from eqconv.equivariant import GeneratorMap
from eqconv.fnn import Activation, AffineLayer, FnnModel, mse_loss_and_grads
from eqconv.groups import translate


def random_generator(D_S, D_T, rng, scale=1.0):
    """A random generator whose j-th output is invariant under the stabilizer of base point j."""
    A = D_S.action
    nb = len(D_T.base_space)
    W = rng.normal(size=(nb, A.size)) * scale
    c = rng.normal(size=nb)

    def ev(x):
        out = np.empty(x.shape[:-1] + (nb,))
        for j, stab in enumerate(D_T.base_stabilizers):
            out[..., j] = np.mean([np.tanh(translate(h, x, A) @ W[j] + c[j]) for h in stab], axis=0)
        return out

    return GeneratorMap(ev, D_S, D_T)


def random_fnn(sizes, rng, activation="tanh", measure=None):
    layers = []
    for i, (a, b) in enumerate(zip(sizes, sizes[1:])):
        mu = measure if (i == 0 and measure is not None) else np.ones(a)
        layers.append(AffineLayer(rng.normal(size=(b, a)) / np.sqrt(a), rng.normal(size=b), mu))
    return FnnModel(tuple(layers), Activation.parse(activation))


def invariant_first_layer_fnn(sizes, D_S, D_T, rng, activation="tanh"):
    """Random FNN whose first-layer rows are invariant under the output stabilizer."""
    phi = random_fnn(sizes, rng, activation)
    act = D_S.action.act_table
    first = phi.layers[0]
    W = np.mean([first.weight[:, act[h]] for h in D_T.stabilizer], axis=0)
    layers = (AffineLayer(W, first.bias, first.measure),) + phi.layers[1:]
    return FnnModel(layers, phi.activation)


def _flat(phi):
    return [p for A in phi.layers for p in (A.weight, A.bias)]


def _with(phi, params):
    it = iter(params)
    layers = tuple(AffineLayer(next(it), next(it), A.measure) for A in phi.layers)
    return FnnModel(layers, phi.activation)


def check_gradients(phi, X, Y, eps=1e-6):
    """Largest relative error between backprop and central differences."""
    _, grads = mse_loss_and_grads(phi, X, Y)
    analytic = [g for pair in grads for g in pair]
    params = [p.copy() for p in _flat(phi)]
    worst = 0.0
    for k, p in enumerate(params):
        num = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            plus = [q.copy() for q in params]
            minus = [q.copy() for q in params]
            plus[k][idx] += eps
            minus[k][idx] -= eps
            num[idx] = (mse_loss_and_grads(_with(phi, plus), X, Y)[0]
                        - mse_loss_and_grads(_with(phi, minus), X, Y)[0]) / (2 * eps)
        denom = max(np.abs(num).max(), np.abs(analytic[k]).max(), 1e-8)
        worst = max(worst, float(np.abs(num - analytic[k]).max() / denom))
    return worst
