"""Local test network scaffolding: genesis, wallets, and node configs for
an N-validator network on loopback ports. Used by `proml testnet init` and
by the integration tests."""

from __future__ import annotations

import json
import time
from pathlib import Path

from .genesis import GasSchedule, Genesis, Participant
from .keys import KeyPair
from .node import NodeConfig
from .p2p import Peer
from .wallet import create_wallet

TEST_WALLET_ITERATIONS = 10_000  # keep local networks snappy to unlock


def free_ports(n: int) -> list[int]:
    import socket

    socks, ports = [], []
    for _ in range(n):
        s = socket.socket()
        s.bind(("127.0.0.1", 0))
        socks.append(s)
        ports.append(s.getsockname()[1])
    for s in socks:
        s.close()
    return ports


def build_testnet(
    out_dir: str | Path,
    n_validators: int = 5,
    n_observers: int = 0,
    block_interval_s: float = 13.0,
    passphrase: str = "proml-dev",
    genesis_time_ms: int | None = None,
    replication_factor: int = 2,
    seed_base: int = 100,
) -> tuple[Genesis, list[NodeConfig], list[KeyPair]]:
    """Writes genesis.json, per-node wallets and configs under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    total = n_validators + n_observers
    keys = [KeyPair.from_seed(bytes([seed_base + i]) * 32) for i in range(total)]
    participants = tuple(Participant(k.address, k.public_bytes) for k in keys)
    genesis = Genesis(
        chain_id=f"proml-local-{n_validators}v",
        genesis_time_ms=genesis_time_ms if genesis_time_ms is not None else int(time.time() * 1000),
        block_interval_ms=round(block_interval_s * 1000),
        validators=participants[:n_validators],
        participants=participants,
        gas_schedule=GasSchedule(),
        replication_factor=replication_factor,
    )
    genesis_path = out / "genesis.json"
    genesis.save(genesis_path)

    api_ports = free_ports(total)
    p2p_ports = free_ports(total)
    configs = []
    for i, key in enumerate(keys):
        node_dir = out / f"node{i}"
        node_dir.mkdir(exist_ok=True)
        wallet_path = node_dir / "wallet.json"
        create_wallet(wallet_path, passphrase, [key], iterations=TEST_WALLET_ITERATIONS)
        peers = tuple(
            Peer(keys[j].address, "127.0.0.1", p2p_ports[j]) for j in range(total) if j != i
        )
        config = NodeConfig(
            node_key_file=str(wallet_path),
            genesis_file=str(genesis_path),
            api_listen=f"127.0.0.1:{api_ports[i]}",
            p2p_listen=f"127.0.0.1:{p2p_ports[i]}",
            peers=peers,
            data_dir=str(node_dir / "data"),
            role="validator" if i < n_validators else "observer",
        )
        (node_dir / "config.json").write_text(
            json.dumps(config.to_json(), indent=2) + "\n", encoding="utf-8"
        )
        configs.append(config)
    return genesis, configs, keys
