import pytest

from proml import engine
from proml.genesis import Genesis, Participant
from proml.keys import KeyPair


def deterministic_keypair(i: int) -> KeyPair:
    return KeyPair.from_seed(bytes([i]) * 32)


def build_genesis(
    n_validators: int = 3,
    n_observers: int = 1,
    block_interval_s: float = 1.0,
    genesis_time_ms: int = 1_700_000_000_000,
    **overrides,
) -> tuple[Genesis, dict[bytes, KeyPair]]:
    """Deterministic test network: validators are participants 1..n, then
    n_observers extra (non-validating) participants."""
    keys = {}
    validators = []
    participants = []
    for i in range(1, n_validators + n_observers + 1):
        kp = deterministic_keypair(i)
        keys[kp.address] = kp
        part = Participant(kp.address, kp.public_bytes)
        participants.append(part)
        if i <= n_validators:
            validators.append(part)
    genesis = Genesis(
        chain_id="proml-test",
        genesis_time_ms=genesis_time_ms,
        block_interval_ms=round(block_interval_s * 1000),
        validators=tuple(validators),
        participants=tuple(participants),
        **overrides,
    )
    return genesis, keys


@pytest.fixture
def net3():
    """3-validator genesis plus one observer-only participant."""
    genesis, keys = build_genesis()
    return genesis, keys


@pytest.fixture
def world3(net3):
    genesis, keys = net3
    return genesis, keys, engine.build_genesis_state(genesis)
