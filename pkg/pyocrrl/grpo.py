from __future__ import print_function, division
import json
import string
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import entropy

from pyocrrl.errors import ContractError, ParseError, SchemaError, \
    DatasetError
from pyocrrl.rt import text_edit_reward


grpo_config = {}
grpo_config["sigma_guard"] = 1.0e-8
grpo_config["epsilon"] = 0.2
grpo_config["reward_bins"] = 10
grpo_config["entropy_threshold"] = 0.3
grpo_config["group_size"] = 8
grpo_config["step_size"] = 0.2
grpo_config["iterations"] = 300
grpo_config["inner_steps"] = 1
grpo_config["seed"] = 7


@dataclass
class RolloutGroup:
    """G sampled responses for one input and their rewards

    Attributes:
    ----------
        input_id : str
        rewards : list of float
        old_logp : list of float, sequence log-probs under the sampling
            policy (optional)
        new_logp : list of float, under the current policy (optional)

    """
    input_id: str
    rewards: list
    old_logp: list = None
    new_logp: list = None

    def __post_init__(self):
        self.rewards = [float(r) for r in self.rewards]
        for name in ("old_logp", "new_logp"):
            value = getattr(self, name)
            if value is None:
                continue
            value = [float(x) for x in value]
            if len(value) != len(self.rewards):
                raise ContractError("RolloutGroup: '{0}' {1} has length " \
                                    "{2}, expected {3}".
                                    format(self.input_id, name, len(value),
                                           len(self.rewards)))
            setattr(self, name, value)

    @property
    def size(self):
        return len(self.rewards)


@dataclass
class AdvantageSet:
    """group-normalized advantages.  all zero when degenerate"""
    advantages: np.ndarray
    mu: float
    sigma: float
    degenerate: bool = False


def group_advantages(rewards, sigma_guard=None):
    """group-normalized advantages

    Parameters:
    ----------
        rewards : sequence of float, length >= 2
        sigma_guard : float
            groups whose population std is below this get zero advantages.
            defaults to grpo_config["sigma_guard"]
    Returns:
    -------
        AdvantageSet with A_i = (R_i - mu) / sigma, sigma the population
        standard deviation
    """
    if sigma_guard is None:
        sigma_guard = grpo_config["sigma_guard"]
    r = np.array(rewards, dtype=np.float64)
    if r.ndim != 1 or r.shape[0] < 2:
        raise ContractError("group_advantages(): need at least 2 rewards, " \
                            "got {0}".format(r.size))
    mu = float(r.mean())
    sigma = float(r.std())
    if sigma < sigma_guard:
        return AdvantageSet(np.zeros_like(r), mu, sigma, degenerate=True)
    return AdvantageSet((r - mu) / sigma, mu, sigma, degenerate=False)


def clipped_term(rho, advantage, epsilon):
    """min(rho * A, clip(rho, 1 - eps, 1 + eps) * A)"""
    return min(rho * advantage,
               min(max(rho, 1.0 - epsilon), 1.0 + epsilon) * advantage)


def _ratios(group, advantages, epsilon, caller):
    if not 0.0 < epsilon < 1.0:
        raise ContractError("{0}(): epsilon must be in (0,1), not {1}".
                            format(caller, epsilon))
    if group.old_logp is None or group.new_logp is None:
        raise ContractError("{0}(): group '{1}' needs old_logp and " \
                            "new_logp".format(caller, group.input_id))
    a = np.asarray(advantages.advantages, dtype=np.float64)
    if a.shape[0] != group.size:
        raise ContractError("{0}(): {1} advantages for a group of {2}".
                            format(caller, a.shape[0], group.size))
    rho = np.exp(np.array(group.new_logp) - np.array(group.old_logp))
    return rho, a


def clipped_objective(group, advantages, epsilon=None):
    """clipped surrogate objective, no KL term

    Parameters:
    ----------
        group : RolloutGroup with old_logp and new_logp
        advantages : AdvantageSet
        epsilon : float in (0,1)
    Returns:
    -------
        float : mean over the group of min(rho A, clip(rho) A)
    """
    if epsilon is None:
        epsilon = grpo_config["epsilon"]
    rho, a = _ratios(group, advantages, epsilon, "clipped_objective")
    terms = np.minimum(rho * a, np.clip(rho, 1.0 - epsilon, 1.0 + epsilon) * a)
    return float(terms.mean())


def unclipped_objective(group, advantages):
    """mean of rho A, the upper bound of clipped_objective"""
    rho, a = _ratios(group, advantages, 0.5, "unclipped_objective")
    return float((rho * a).mean())


def normalized_reward_entropy(rewards, reward_bins=None):
    """entropy of the reward histogram over equal-width bins on [0,1],
    divided by log(reward_bins).  rewards outside [0,1] are clipped
    """
    if reward_bins is None:
        reward_bins = grpo_config["reward_bins"]
    reward_bins = int(reward_bins)
    if reward_bins < 1:
        raise ContractError("normalized_reward_entropy(): reward_bins must " \
                            "be positive")
    if reward_bins == 1:
        return 0.0
    r = np.clip(np.array(rewards, dtype=np.float64), 0.0, 1.0)
    counts, _ = np.histogram(r, bins=reward_bins, range=(0.0, 1.0))
    h = entropy(counts) / np.log(reward_bins)
    return round(float(h), 12)


def group_entropies(groups, reward_bins=None):
    """DataFrame of input_id and normalized entropy, one row per group"""
    ids, ents = [], []
    for group in groups:
        if group.size < 2:
            raise ContractError("group_entropies(): group '{0}' has {1} " \
                                "reward(s), need at least 2".
                                format(group.input_id, group.size))
        ids.append(group.input_id)
        ents.append(normalized_reward_entropy(group.rewards, reward_bins))
    return pd.DataFrame({"input_id": ids, "entropy": ents},
                        columns=["input_id", "entropy"])


def entropy_filter(groups, reward_bins=None, threshold=None):
    """keep the inputs whose rollout rewards are spread out

    Parameters:
    ----------
        groups : list of RolloutGroup, each with >= 2 rewards
        reward_bins : int
        threshold : float in [0,1]
    Returns:
    -------
        list of input_id with normalized entropy >= threshold, highest
        entropy first, ties by id
    """
    if threshold is None:
        threshold = grpo_config["entropy_threshold"]
    if not 0.0 <= threshold <= 1.0:
        raise ContractError("entropy_filter(): threshold must be in [0,1]")
    df = group_entropies(groups, reward_bins)
    df = df.loc[df.entropy >= threshold]
    df = df.sort_values(by=["entropy", "input_id"], ascending=[False, True],
                        kind="mergesort")
    return list(df.input_id)


def read_rollout_groups(filename):
    """read rollout groups from jsonl: {"input_id": ..., "rewards": [...]}
    with optional "old_logp" and "new_logp" arrays
    """
    groups = []
    try:
        f = open(filename, 'r', encoding="utf-8")
    except (IOError, OSError) as e:
        raise DatasetError("read_rollout_groups(): error opening " +
                           "{0}: {1}".format(filename, str(e)))
    with f:
        for iline, line in enumerate(f, start=1):
            if len(line.strip()) == 0:
                continue
            try:
                obj = json.loads(line)
            except ValueError as e:
                raise ParseError("read_rollout_groups(): malformed json on " \
                                 "line {0}: {1}".format(iline, str(e)))
            if not isinstance(obj, dict) or "input_id" not in obj or \
                    not isinstance(obj.get("rewards"), list):
                raise SchemaError("read_rollout_groups(): line {0} needs " \
                                  "'input_id' and a 'rewards' array".
                                  format(iline))
            try:
                groups.append(RolloutGroup(str(obj["input_id"]),
                                           obj["rewards"],
                                           obj.get("old_logp"),
                                           obj.get("new_logp")))
            except (TypeError, ValueError) as e:
                raise SchemaError("read_rollout_groups(): line {0}: {1}".
                                  format(iline, str(e)))
    return groups


class ToyPolicy(object):
    """tabular categorical policy: one independent softmax per position

    Parameters:
    ----------
        length : int
            sequence length
        alphabet : str
            symbols; logits start at zero (uniform)

    """
    def __init__(self, length, alphabet):
        self.alphabet = alphabet
        self.logits = np.zeros((length, len(alphabet)), dtype=np.float64)

    @property
    def probs(self):
        z = self.logits - self.logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def sample(self, rng, n):
        """(n, length) array of symbol indices"""
        p = self.probs
        idx = np.empty((n, p.shape[0]), dtype=np.int64)
        for t in range(p.shape[0]):
            idx[:, t] = rng.choice(p.shape[1], size=n, p=p[t])
        return idx

    def decode(self, idx):
        return ''.join(self.alphabet[i] for i in idx)

    def logp(self, idx):
        """sequence log-probabilities of each row of idx"""
        p = self.probs
        cols = np.arange(p.shape[0])
        return np.log(p[cols[None, :], idx]).sum(axis=1)

    def objective_gradient(self, idx, old_logp, advantages, epsilon):
        """gradient of the clipped objective with respect to the logits

        a term contributes rho_i A_i grad(logp_i) unless its ratio is
        clipped on the side its advantage points to
        """
        p = self.probs
        rho = np.exp(self.logp(idx) - old_logp)
        grad = np.zeros_like(self.logits)
        g = idx.shape[0]
        for i in range(g):
            a = advantages[i]
            if (a > 0.0 and rho[i] > 1.0 + epsilon) or \
                    (a < 0.0 and rho[i] < 1.0 - epsilon):
                continue
            # d logp / d logits = onehot - softmax, per position
            d = -p.copy()
            d[np.arange(p.shape[0]), idx[i]] += 1.0
            grad += rho[i] * a * d
        return grad / g


def run_toy_policy(target, group_size=None, iterations=None, step_size=None,
                   seed=None, epsilon=None, inner_steps=None, alphabet=None,
                   sigma_guard=None):
    """train a ToyPolicy to emit target under the text edit reward

    Parameters:
    ----------
        target : str
            non-empty target string
        group_size : int >= 2
            responses sampled per iteration
        iterations : int
        step_size : float
            gradient ascent step on the logits
        seed : int
        epsilon : float
            clip range of the objective
        inner_steps : int
            gradient steps per sampled group.  the first step is taken at
            rho = 1; later ones see clipping
        alphabet : str
            defaults to the lowercase ascii letters plus any other
            character of target
    Returns:
    -------
        pandas.DataFrame with columns iteration, mean_reward, max_reward
    """
    group_size = grpo_config["group_size"] if group_size is None \
        else int(group_size)
    iterations = grpo_config["iterations"] if iterations is None \
        else int(iterations)
    step_size = grpo_config["step_size"] if step_size is None \
        else float(step_size)
    seed = grpo_config["seed"] if seed is None else int(seed)
    epsilon = grpo_config["epsilon"] if epsilon is None else float(epsilon)
    inner_steps = grpo_config["inner_steps"] if inner_steps is None \
        else int(inner_steps)
    if not target:
        raise ContractError("run_toy_policy(): target must be non-empty")
    if group_size < 2:
        raise ContractError("run_toy_policy(): group_size must be >= 2")
    if iterations < 0 or inner_steps < 1:
        raise ContractError("run_toy_policy(): iterations must be >= 0 " \
                            "and inner_steps >= 1")
    if alphabet is None:
        alphabet = ''.join(sorted(set(string.ascii_lowercase) | set(target)))

    rng = np.random.default_rng(seed)
    policy = ToyPolicy(len(target), alphabet)
    means, maxes = [], []
    for _ in range(iterations):
        idx = policy.sample(rng, group_size)
        rewards = np.array([text_edit_reward(policy.decode(row), target)
                            for row in idx])
        means.append(float(rewards.mean()))
        maxes.append(float(rewards.max()))
        adv = group_advantages(rewards, sigma_guard)
        if adv.degenerate or step_size == 0.0:
            continue
        old_logp = policy.logp(idx)
        for _ in range(inner_steps):
            policy.logits += step_size * policy.objective_gradient(
                idx, old_logp, adv.advantages, epsilon)
    return pd.DataFrame({"iteration": np.arange(1, iterations + 1),
                         "mean_reward": means, "max_reward": maxes},
                        columns=["iteration", "mean_reward", "max_reward"])


def simulate_toy_policy(target, group_size=None, iterations=None,
                        step_size=None, seed=None, **kwargs):
    """per-iteration mean rewards of run_toy_policy()"""
    df = run_toy_policy(target, group_size=group_size, iterations=iterations,
                        step_size=step_size, seed=seed, **kwargs)
    return list(df.mean_reward)


def write_trajectory(df, filename):
    """csv with columns iteration, mean_reward, max_reward"""
    df.to_csv(filename, index=False, float_format="%.12g")
