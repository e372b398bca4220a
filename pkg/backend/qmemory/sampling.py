"""Random states, channels, processes and retrievers for test batteries."""

from typing import Optional, Sequence

import numpy as np
from scipy.stats import unitary_group

from .process import (
    PROCESS_LABELS,
    ChoiChannel,
    CmEnsemble,
    TpmProcess,
    cm_mixture,
    dephasing_process,
    markov_process,
    process_from_dynamics,
)
from .tensor import LabeledOperator, as_space, partial_trace, tensor


def random_hermitian(space, rng: np.random.Generator) -> LabeledOperator:
    space = as_space(space)
    g = rng.normal(size=(space.dim, space.dim)) + 1j * rng.normal(size=(space.dim, space.dim))
    return LabeledOperator(space, (g + g.conj().T) / 2)


def random_density(label, rng: np.random.Generator, rank: Optional[int] = None) -> LabeledOperator:
    space = as_space(label)
    rank = rank or space.dim
    g = rng.normal(size=(space.dim, rank)) + 1j * rng.normal(size=(space.dim, rank))
    rho = g @ g.conj().T
    return LabeledOperator(space, rho / np.trace(rho).real)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    if d == 1:
        return np.exp(2j * np.pi * rng.random()).reshape(1, 1)
    return unitary_group.rvs(d, random_state=rng)


def random_kraus(d_in: int, d_out: int, rng: np.random.Generator, n_kraus: Optional[int] = None) -> list:
    """Kraus operators of a random channel, cut from a random isometry."""
    n_kraus = max(n_kraus or int(rng.integers(1, d_in * d_out + 1)), int(np.ceil(d_in / d_out)))
    isometry = random_unitary(d_out * n_kraus, rng)[:, :d_in]
    return [isometry[k * d_out:(k + 1) * d_out, :] for k in range(n_kraus)]


def random_channel(in_label, out_label, rng: np.random.Generator) -> ChoiChannel:
    d_in, d_out = as_space(in_label).dim, as_space(out_label).dim
    return ChoiChannel.from_kraus(random_kraus(d_in, d_out, rng), in_label, out_label)


def _labels(dims: Sequence[int], labels: Sequence[str]):
    return [(name, d) for name, d in zip(labels, dims)]


def random_markov(rng: np.random.Generator, dims=(2, 2, 2), labels=PROCESS_LABELS) -> TpmProcess:
    a, b, c = _labels(dims, labels)
    return markov_process(random_density(a, rng), random_channel(b, c, rng))


def random_cm_ensemble(rng: np.random.Generator, size: int, dims=(2, 2, 2), labels=PROCESS_LABELS) -> CmEnsemble:
    a, b, c = _labels(dims, labels)
    weights = rng.dirichlet(np.ones(size))
    return CmEnsemble(
        tuple(weights),
        tuple(random_density(a, rng) for _ in range(size)),
        tuple(random_channel(b, c, rng) for _ in range(size)),
    )


def random_cm_process(
    rng: np.random.Generator, size: Optional[int] = None, dims=(2, 2, 2), labels=PROCESS_LABELS
) -> TpmProcess:
    size = size or int(rng.integers(2, 9))
    return cm_mixture(random_cm_ensemble(rng, size, dims, labels))


def random_tpm(rng: np.random.Generator, d: int = 2, d_env: int = 2, labels=PROCESS_LABELS) -> TpmProcess:
    """A generic process from random joint system-environment unitaries."""
    return process_from_dynamics(
        random_unitary(d * d_env, rng),
        random_unitary(d * d_env, rng),
        random_density(("S", d), rng),
        random_density(("E", d_env), rng),
        labels,
    )


def random_dephasing(rng: np.random.Generator, d: int = 2, d_env: int = 3) -> TpmProcess:
    return dephasing_process(
        [random_unitary(d, rng) for _ in range(d_env)],
        rng.permutation(d_env).tolist(),
        random_density(("S", d), rng),
        random_density(("E", d_env), rng),
        random_unitary(d * d_env, rng),
    )


def random_retriever(rng: np.random.Generator, dims=(2, 2, 2), labels=PROCESS_LABELS, slack: float = 0.999):
    """A random Θ scaled onto the boundary of η ⊗ id − Tr_A Θ ⪰ 0, with its η."""
    from .memory import EntanglementRetriever

    a, b, c = _labels(dims, labels)
    theta = random_density([a, b, c], rng)
    eta = random_density(b, rng)
    bound = tensor(eta, LabeledOperator(as_space(c), np.eye(c[1])))
    marginal = partial_trace(theta, [a[0]]).reorder(bound.names)
    vals, vecs = np.linalg.eigh(bound.matrix)
    inv_sqrt = vecs @ np.diag(vals ** -0.5) @ vecs.conj().T
    scale = np.linalg.eigvalsh(inv_sqrt @ marginal.matrix @ inv_sqrt)[-1]
    return EntanglementRetriever(theta * (slack / scale), eta)
