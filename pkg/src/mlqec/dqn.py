"""Deep-Q search over classical parity-check matrices.

The state is an n1 x n2 binary matrix H.  An action flips one entry of H, and
the reward is minus the neural decoder's failure rate on the hypergraph product
code built from the new H, plus the rank deficit ``rank(H) - n1``.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import gf2, nn
from .codes import CodeError, hypergraph_product_code
from .gf2 import BinaryMatrix, ShapeError
from .nn import AdamState, MlpModel, TrainConfig
from .nn_decoder import DEFAULT_HIDDEN, count_failures, fit_decoder
from .pauli import ChannelParams

__all__ = [
    "RewardBudget",
    "RLConfig",
    "Transition",
    "ReplayMemory",
    "RewardOutcome",
    "DQNAgent",
    "LearnResult",
    "env_step",
    "evaluate_state",
    "compute_reward",
    "state_rng",
    "select_action",
    "dqn_update",
    "learn_code",
    "reward_value",
    "random_full_rank",
    "write_log",
]


@dataclass(frozen=True)
class RewardBudget:
    """Decoder training and evaluation effort spent on each reward."""

    n_samples: int = 2000
    epochs: int = 200
    eval_trials: int = 2000
    batch_size: int = 100
    learning_rate: float = 0.01
    hidden: tuple[int, ...] = DEFAULT_HIDDEN


@dataclass(frozen=True)
class RLConfig:
    steps_per_episode: int = 32
    episodes: int = 50
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.1
    epsilon_decay_fraction: float = 0.5
    q_learning_rate: float = 0.001
    replay_capacity: int = 10000
    minibatch_size: int = 32
    target_sync_interval: int = 1
    q_hidden: tuple[int, ...] = (128, 128)
    reward_budget: RewardBudget = field(default_factory=RewardBudget)
    seed: int = 0
    reward_seed: int = 0
    fast_fail: bool = True
    allow_rank_deficient_start: bool = False

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.steps_per_episode < 1 or self.episodes < 1:
            raise ValueError("steps_per_episode and episodes must be >= 1")
        for name in ("epsilon_start", "epsilon_end"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.replay_capacity < 1 or self.minibatch_size < 1 or self.target_sync_interval < 1:
            raise ValueError("replay_capacity, minibatch_size and target_sync_interval must be >= 1")

    @property
    def total_steps(self) -> int:
        return self.steps_per_episode * self.episodes

    def epsilon(self, step: int) -> float:
        """Linear decay from start to end over the first ``epsilon_decay_fraction`` of all steps."""
        horizon = self.epsilon_decay_fraction * self.total_steps
        frac = 1.0 if horizon <= 0 else min(1.0, step / horizon)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac

    def to_dict(self) -> dict:
        return asdict(self)


class Transition(NamedTuple):
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray


class ReplayMemory:
    """Bounded FIFO of transitions with uniform sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        self._items.append(transition)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if not self._items:
            raise ValueError("cannot sample from an empty replay memory")
        idx = rng.choice(len(self._items), size=min(batch_size, len(self._items)), replace=False)
        return [self._items[i] for i in idx]

    def __iter__(self):
        return iter(self._items)


def env_step(h: BinaryMatrix, action: int) -> BinaryMatrix:
    """Copy of ``h`` with the entry at ``(action // n2, action % n2)`` flipped."""
    n1, n2 = h.shape
    if not 0 <= action < n1 * n2:
        raise ValueError(f"action {action} out of range [0, {n1 * n2})")
    bits = h.bits.copy()
    bits[action // n2, action % n2] ^= 1
    return BinaryMatrix(bits)


class RewardOutcome(NamedTuple):
    reward: float
    rank: int
    failure_rate: float | None
    status: str  # "ok", "rank-deficient" or "unbuildable"


def state_rng(h: BinaryMatrix, reward_seed: int) -> np.random.Generator:
    """Random source owned by one state, so a state's reward never depends on visit order."""
    key = int("".join(str(int(b)) for b in h.bits.reshape(-1)), 2)
    words = [(key >> (32 * i)) & 0xFFFFFFFF for i in range(max(1, (h.rows * h.cols + 31) // 32))]
    return np.random.default_rng(np.random.SeedSequence([reward_seed, h.rows, h.cols, *words]))


def reward_value(failure_rate: float, rank: int, n1: int) -> float:
    """``-failure_rate + (rank - n1)``; never positive."""
    return -failure_rate + (rank - n1)


def random_full_rank(n1: int, n2: int, rng: np.random.Generator, max_tries: int = 1000) -> BinaryMatrix:
    """Uniformly drawn ``n1 x n2`` binary matrix of full row rank (rejection sampling)."""
    if n1 > n2:
        raise ValueError(f"cannot have full row rank with {n1} rows and {n2} columns")
    for _ in range(max_tries):
        h = BinaryMatrix(rng.integers(0, 2, size=(n1, n2), dtype=np.uint8))
        if gf2.rank(h) == n1:
            return h
    raise RuntimeError("no full-rank matrix found")


def evaluate_state(
    h: BinaryMatrix,
    params: ChannelParams,
    budget: RewardBudget,
    rng: np.random.Generator,
    fast_fail: bool = True,
) -> RewardOutcome:
    """Reward of a parity-check matrix together with its ingredients.

    Rank-deficient matrices are scored as certain decoder failure when
    ``fast_fail`` is set; otherwise the code is built from a row basis of ``h``
    and evaluated like any other.
    """
    n1 = h.rows
    r = gf2.rank(h)
    if r == 0:
        return RewardOutcome(reward_value(1.0, r, n1), r, None, "unbuildable")
    if r < n1 and fast_fail:
        return RewardOutcome(reward_value(1.0, r, n1), r, None, "rank-deficient")
    basis = h if r == n1 else gf2.row_basis(h)
    try:
        code = hypergraph_product_code(basis)
    except CodeError:
        return RewardOutcome(reward_value(1.0, r, n1), r, None, "unbuildable")
    train_seed = int(rng.integers(2**32))
    eval_rng = np.random.default_rng(int(rng.integers(2**32)))
    cfg = TrainConfig(batch_size=budget.batch_size, epochs=budget.epochs, learning_rate=budget.learning_rate, seed=train_seed)
    fit = fit_decoder(code, params, cfg, budget.hidden, budget.n_samples)
    failures = count_failures(fit.decoder, code, params, budget.eval_trials, eval_rng)
    rate = failures / budget.eval_trials
    return RewardOutcome(reward_value(rate, r, n1), r, rate, "ok" if r == n1 else "rank-deficient")


def compute_reward(
    h: BinaryMatrix, params: ChannelParams, budget: RewardBudget, rng: np.random.Generator, fast_fail: bool = True
) -> float:
    return evaluate_state(h, params, budget, rng, fast_fail).reward


def _check_qnet(qnet: MlpModel, n_actions: int) -> None:
    if qnet.n_inputs != n_actions or qnet.n_outputs != n_actions:
        raise ShapeError(f"Q-network maps {qnet.n_inputs} -> {qnet.n_outputs}, state has {n_actions} bits")


def select_action(qnet: MlpModel, h: BinaryMatrix, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy action; greedy ties go to the lowest index."""
    n_actions = h.rows * h.cols
    _check_qnet(qnet, n_actions)
    if rng.random() < epsilon:
        return int(rng.integers(n_actions))
    q = nn.forward(qnet, h.bits.reshape(-1).astype(np.float64))
    return int(np.argmax(q))


def dqn_update(
    qnet: MlpModel,
    target_net: MlpModel,
    batch: Sequence[Transition],
    gamma: float,
    opt_state: AdamState,
    learning_rate: float,
) -> float:
    """One Adam step on the squared TD error of the taken actions; returns the pre-step loss."""
    if not batch:
        raise ValueError("empty batch")
    states = np.array([t.state for t in batch], dtype=np.float64)
    nexts = np.array([t.next_state for t in batch], dtype=np.float64)
    actions = np.array([t.action for t in batch])
    rewards = np.array([t.reward for t in batch], dtype=np.float64)
    td = rewards + gamma * nn.forward(target_net, nexts).max(axis=1)
    targets = np.zeros((len(batch), qnet.n_outputs))
    mask = np.zeros_like(targets)
    rows = np.arange(len(batch))
    targets[rows, actions] = td
    mask[rows, actions] = 1.0
    loss, grads = nn.grad(qnet, states, targets, "mse", mask)
    nn.adam_step(qnet, opt_state, grads, TrainConfig(learning_rate=learning_rate))
    return loss


class DQNAgent:
    """Q-network, lagged target network and optimizer state."""

    def __init__(self, n_actions: int, config: RLConfig, rng: np.random.Generator):
        sizes = (n_actions, *config.q_hidden, n_actions)
        self.config = config
        self.qnet = nn.init_model(sizes, rng, "linear")
        self.target_net = self.qnet.copy()
        self.opt_state = AdamState.zeros_like(self.qnet)
        self.updates = 0

    def update(self, batch: Sequence[Transition]) -> float:
        loss = dqn_update(self.qnet, self.target_net, batch, self.config.gamma, self.opt_state, self.config.q_learning_rate)
        self.updates += 1
        if self.updates % self.config.target_sync_interval == 0:
            self.target_net = self.qnet.copy()
        return loss


@dataclass
class LearnResult:
    h_final: BinaryMatrix
    h_best: BinaryMatrix | None
    best_reward: float
    initial_reward: float
    log: list[dict]
    config: RLConfig
    qnet: MlpModel
    reward_calls: int = 0


def learn_code(
    seed_h: BinaryMatrix,
    params: ChannelParams,
    config: RLConfig = RLConfig(),
    reward_cache: dict | None = None,
    agent: DQNAgent | None = None,
) -> LearnResult:
    """Run the episode loop and return the final, best and logged states.

    Rewards are memoised per state in ``reward_cache`` (a fresh dict by
    default); each state draws its decoder randomness from
    :func:`state_rng`, so caching never changes a result.
    """
    n1, n2 = seed_h.shape
    if config.total_steps <= n1 * n2:
        raise ValueError(f"episodes * steps = {config.total_steps} must exceed n1 * n2 = {n1 * n2}")
    if gf2.rank(seed_h) < n1 and not config.allow_rank_deficient_start:
        raise ValueError("seed parity-check matrix is not full rank")
    cache = {} if reward_cache is None else reward_cache
    calls = 0

    def outcome(h: BinaryMatrix) -> RewardOutcome:
        nonlocal calls
        key = (h.bits.tobytes(), h.shape, params, config.reward_budget, config.reward_seed, config.fast_fail)
        hit = cache.get(key)
        if hit is None:
            calls += 1
            hit = evaluate_state(h, params, config.reward_budget, state_rng(h, config.reward_seed), config.fast_fail)
            cache[key] = hit
        return hit

    init_ss, policy_ss, replay_ss = np.random.SeedSequence(config.seed).spawn(3)
    policy_rng = np.random.default_rng(policy_ss)
    replay_rng = np.random.default_rng(replay_ss)
    if agent is None:
        agent = DQNAgent(n1 * n2, config, np.random.default_rng(init_ss))
    memory = ReplayMemory(config.replay_capacity)

    first = outcome(seed_h)
    best_h = seed_h if first.status == "ok" else None
    best_r = first.reward if first.status == "ok" else -math.inf
    log: list[dict] = []
    step = 0
    h = seed_h
    for episode in range(config.episodes):
        h = seed_h
        for t in range(config.steps_per_episode):
            eps = config.epsilon(step)
            action = select_action(agent.qnet, h, eps, policy_rng)
            h_next = env_step(h, action)
            res = outcome(h_next)
            memory.push(Transition(h.bits.reshape(-1).copy(), action, res.reward, h_next.bits.reshape(-1).copy()))
            loss = agent.update(memory.sample(config.minibatch_size, replay_rng))
            if res.status == "ok" and res.reward > best_r:
                best_h, best_r = h_next, res.reward
            log.append(
                {
                    "episode": episode,
                    "step": t,
                    "action": action,
                    "reward": res.reward,
                    "rank": res.rank,
                    "epsilon": eps,
                    "status": res.status,
                    "failure_rate": res.failure_rate,
                    "loss": loss,
                    "state": "".join(h_next.to_rows()),
                }
            )
            h = h_next
            step += 1
    return LearnResult(h, best_h, best_r, first.reward, log, config, agent.qnet, calls)


def write_log(result: LearnResult, path: str | Path, provenance: dict | None = None) -> None:
    """JSON-lines training log: one header record, then one record per step."""
    with open(path, "w") as fh:
        header = {"header": True, "config": result.config.to_dict(), **(provenance or {})}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in result.log:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
