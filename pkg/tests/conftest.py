import numpy as np
import pytest

from messi_irl.mdp import MdpModel


def random_mdp(rng, n_states=3, n_actions=2, n_features=2, discount=0.9, deterministic=False):
    if deterministic:
        P = np.zeros((n_states, n_actions, n_states))
        nxt = rng.integers(n_states, size=(n_states, n_actions))
        for s in range(n_states):
            P[s, np.arange(n_actions), nxt[s]] = 1.0
    else:
        P = rng.random((n_states, n_actions, n_states)) ** 2
        P /= P.sum(axis=2, keepdims=True)
    F = rng.random((n_states, n_features)) * (1 - discount)
    d0 = rng.random(n_states)
    d0 /= d0.sum()
    return MdpModel(P, F, d0, discount, normalized=True)


def self_loop_mdp(discount=0.9, features=((1.0,),)):
    return MdpModel(np.ones((1, 1, 1)), np.array(features), np.ones(1), discount)


def chain_mdp(discount=0.5):
    """Two states; action 0 always moves to the other state, action 1 stays."""
    P = np.zeros((2, 2, 2))
    P[0, 0, 1] = P[1, 0, 0] = 1.0
    P[0, 1, 0] = P[1, 1, 1] = 1.0
    return MdpModel(P, np.eye(2) * (1 - discount), np.array([1.0, 0.0]), discount, normalized=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
