"""Weighted recursive least-squares engine with pluggable error weighting.

One recursion serves every algorithm in this package: per sample, the
prior error is formed with the previous weights, the weighting object maps
it to a factor ``rho``, and the gain

    psi = rho * P x / (lambda + rho * x' P x)

updates the weight vector, after which the inverse weighted correlation
matrix ``P`` is propagated by the rank-one matrix-inversion-lemma step and
re-symmetrized.  With unit weighting the trajectory is conventional RLS;
with the Geman-McClure weighting it is the robust recursion this package
is built around.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .estimators import PlainRls
from .volterra import expand_sequence, memory_from_length


class DivergenceError(ArithmeticError):
    """Filter state left the representable range (non-finite weights or P).

    Carries the 1-based iteration index at which the blow-up was detected,
    and, when raised from a full run, the partial result up to that point.
    """

    def __init__(self, iteration: int, partial: Optional["RunResult"] = None):
        super().__init__(f"adaptive filter diverged at iteration {iteration}")
        self.iteration = iteration
        self.partial = partial


class StepRecord(NamedTuple):
    output: float      # filter output with the pre-update weights
    error: float       # prior error d - output
    rho: float         # weighting factor applied to this sample
    gain_norm: float   # Euclidean norm of the gain vector


class RecursiveFilter:
    """Exponentially weighted recursive estimator over a fixed-length regressor.

    Parameters
    ----------
    length:
        Regressor/weight vector length.
    weighting:
        Object with a ``weight(e) -> float`` method (see
        :mod:`robust_volterra.estimators`).  Defaults to plain RLS.
    forgetting:
        Exponential forgetting factor, strictly inside (0, 1).
    init_const:
        Initialization constant ``zeta``; ``P`` starts at ``I / zeta``.
    """

    def __init__(self, length: int, weighting=None, forgetting: float = 0.99,
                 init_const: float = 0.01):
        length = int(length)
        if length < 1:
            raise ValueError(f"length must be >= 1, got {length!r}")
        if not (0.0 < forgetting < 1.0):
            raise ValueError(f"forgetting factor must lie in (0, 1), got {forgetting!r}")
        if not (init_const > 0):
            raise ValueError(f"init_const must be positive, got {init_const!r}")
        self.length = length
        self.forgetting = float(forgetting)
        self.init_const = float(init_const)
        self.weighting = weighting if weighting is not None else PlainRls()
        self.weights = np.zeros(length)
        self.P = np.eye(length) / self.init_const
        self.n = 0

    def reset(self) -> None:
        self.weights = np.zeros(self.length)
        self.P = np.eye(self.length) / self.init_const
        self.n = 0
        self.weighting.reset()

    def step(self, x: np.ndarray, d: float) -> StepRecord:
        """Process one (regressor, desired) pair and update the state."""
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.size != self.length:
            raise ValueError(f"regressor length {x.size} != filter length {self.length}")
        if not (np.isfinite(d) and np.all(np.isfinite(x))):
            raise ValueError("non-finite input to step")

        lam = self.forgetting
        y = float(self.weights @ x)
        e = float(d) - y
        rho = float(self.weighting.weight(e))

        Px = self.P @ x
        s = float(x @ Px)
        gain = (rho / (lam + rho * s)) * Px
        self.weights = self.weights + gain * e
        P_new = (self.P - np.outer(gain, Px)) / lam
        self.P = (P_new + P_new.T) * 0.5  # keep P symmetric against drift
        self.n += 1

        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.P))):
            raise DivergenceError(self.n)
        return StepRecord(y, e, rho, float(np.linalg.norm(gain)))


@dataclass
class StateTrace:
    """Per-step internals recorded on demand for diagnostics and identities.

    ``p_before[n]`` is the P matrix entering step ``n``; ``weights[n]`` the
    weight vector entering step ``n`` (so ``weights`` has one extra row).
    Only sensible for short runs; the storage is O(N L^2).
    """

    weights: np.ndarray   # (N+1, L)
    p_before: np.ndarray  # (N, L, L)


@dataclass
class RunResult:
    """Traces from one system-identification run.

    ``prior_errors`` is the noise-free prior error (clean desired output
    minus filter output), the quantity whose steady-state mean square is
    the excess mean square error.  ``deviations`` is the Euclidean distance
    of the weights from the true kernel after each step.
    """

    outputs: np.ndarray
    errors: np.ndarray
    prior_errors: np.ndarray
    rhos: np.ndarray
    deviations: np.ndarray
    regressors: Optional[np.ndarray] = None
    states: Optional[StateTrace] = None

    def __len__(self) -> int:
        return self.outputs.size


def run_identification(filt: RecursiveFilter, plant: np.ndarray, inputs: np.ndarray,
                       noise: np.ndarray, memory: Optional[int] = None,
                       record_states: bool = False) -> RunResult:
    """Drive the filter through a full identification experiment.

    The desired signal is the plant's response to ``inputs`` (expanded
    through the second-order Volterra map) plus ``noise``.  On divergence a
    :class:`DivergenceError` is raised carrying the partial result.

    ``memory`` defaults to the unique linear memory consistent with the
    plant length.
    """
    plant = np.asarray(plant, dtype=np.float64).ravel()
    if plant.size != filt.length:
        raise ValueError(f"plant length {plant.size} != filter length {filt.length}")
    inputs = np.asarray(inputs, dtype=np.float64).ravel()
    noise = np.asarray(noise, dtype=np.float64).ravel()
    if inputs.size != noise.size:
        raise ValueError(f"inputs ({inputs.size}) and noise ({noise.size}) lengths differ")
    m = memory_from_length(plant.size) if memory is None else int(memory)
    X = expand_sequence(inputs, m)
    clean = X @ plant
    return run_on_regressors(filt, plant, X, clean + noise, clean,
                             record_states=record_states)


def run_on_regressors(filt: RecursiveFilter, plant: np.ndarray, X: np.ndarray,
                      desired: np.ndarray, clean: np.ndarray,
                      record_states: bool = False) -> RunResult:
    """Core identification loop over pre-expanded regressors.

    Exists so a harness can expand the input once and share the regressor
    matrix across several algorithms on identical streams.
    """
    n_steps = X.shape[0]
    outputs = np.empty(n_steps)
    errors = np.empty(n_steps)
    prior_errors = np.empty(n_steps)
    rhos = np.empty(n_steps)
    deviations = np.empty(n_steps)
    states = None
    if record_states:
        states = StateTrace(
            weights=np.empty((n_steps + 1, filt.length)),
            p_before=np.empty((n_steps, filt.length, filt.length)),
        )
        states.weights[0] = filt.weights

    for n in range(n_steps):
        if record_states:
            states.p_before[n] = filt.P
        try:
            rec = filt.step(X[n], desired[n])
        except DivergenceError as err:
            partial = RunResult(
                outputs=outputs[:n], errors=errors[:n],
                prior_errors=prior_errors[:n], rhos=rhos[:n],
                deviations=deviations[:n],
                regressors=X[:n] if record_states else None,
                states=None,
            )
            raise DivergenceError(err.iteration, partial) from None
        outputs[n] = rec.output
        errors[n] = rec.error
        prior_errors[n] = clean[n] - rec.output
        rhos[n] = rec.rho
        deviations[n] = float(np.linalg.norm(filt.weights - plant))
        if record_states:
            states.weights[n + 1] = filt.weights

    return RunResult(outputs=outputs, errors=errors, prior_errors=prior_errors,
                     rhos=rhos, deviations=deviations,
                     regressors=X if record_states else None, states=states)
