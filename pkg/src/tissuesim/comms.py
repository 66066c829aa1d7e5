"""Neural-like signaling between agents: weighted transmission, input
aggregation with chemical sensing, and Hebbian weight updates with decay."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ConnectionMatrix:
    """Pairwise connection strengths with Hebbian learning rate and decay.

    The diagonal is forced to zero: agents have no self-connection.
    """

    weights: np.ndarray
    learning_rate: float = 0.1
    decay: float = 0.5

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 2 or self.weights.shape[0] != self.weights.shape[1]:
            raise ValueError(f"weights must be square, got shape {self.weights.shape}")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights contain non-finite values")
        if not (0.0 <= self.learning_rate <= 1.0):
            raise ValueError(f"learning_rate must be in [0, 1], got {self.learning_rate}")
        if not (0.0 <= self.decay <= 1.0):
            raise ValueError(f"decay must be in [0, 1], got {self.decay}")
        np.fill_diagonal(self.weights, 0.0)

    @property
    def size(self) -> int:
        return self.weights.shape[0]


def random_connections(
    n: int, rng: np.random.Generator, learning_rate: float = 0.1, decay: float = 0.5
) -> ConnectionMatrix:
    """Standard-normal initial weights, diagonal zeroed."""
    return ConnectionMatrix(
        weights=rng.standard_normal((n, n)), learning_rate=learning_rate, decay=decay
    )


def activation(h):
    """Bounded odd activation turning total input into membrane potential."""
    return np.tanh(h)


def transmit(conn: ConnectionMatrix, activations: np.ndarray, gains=None) -> np.ndarray:
    """Signal matrix I[p, q] = w[p, q] * tanh(a_p) * gain_p.

    gain_p realizes the signal-amplification action; all-ones gains recover
    plain weighted transmission.
    """
    activations = np.asarray(activations, dtype=float)
    if activations.shape != (conn.size,):
        raise ValueError(
            f"activations must have shape ({conn.size},), got {activations.shape}"
        )
    if gains is None:
        gains = np.ones(conn.size)
    gains = np.asarray(gains, dtype=float)
    if gains.shape != (conn.size,):
        raise ValueError(f"gains must have shape ({conn.size},), got {gains.shape}")
    # associate left-to-right so a naive per-element recomputation matches exactly
    return conn.weights * activation(activations)[:, None] * gains[:, None]


def total_input(signals: np.ndarray, chem: np.ndarray) -> np.ndarray:
    """Per-agent total input h_q: column sums of the signal matrix plus the
    locally sensed concentration (identity chemical sensing).

    Accumulates rows in index order so the result is bit-identical to a
    naive per-element loop (pairwise summation would not be).
    """
    signals = np.asarray(signals, dtype=float)
    chem = np.asarray(chem, dtype=float)
    acc = np.zeros(signals.shape[1])
    for row in signals:
        acc = acc + row
    return acc + chem


def hebbian_update(conn: ConnectionMatrix, activations: np.ndarray) -> ConnectionMatrix:
    """One co-activity update: w <- w + lr * (a_p * a_q - decay * w), p != q."""
    activations = np.asarray(activations, dtype=float)
    if activations.shape != (conn.size,):
        raise ValueError(
            f"activations must have shape ({conn.size},), got {activations.shape}"
        )
    coactivity = np.outer(activations, activations)
    new_w = conn.weights + conn.learning_rate * (coactivity - conn.decay * conn.weights)
    np.fill_diagonal(new_w, 0.0)
    return ConnectionMatrix(
        weights=new_w, learning_rate=conn.learning_rate, decay=conn.decay
    )


def compute_activation(h):
    """Membrane potential from total input; stored for the next transmission."""
    return np.tanh(h)
