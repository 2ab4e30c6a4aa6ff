"""promld: run one node from a config file until interrupted."""

from __future__ import annotations

import logging
import signal
import threading

import click

from .node import Node, NodeConfig


@click.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Node config JSON (see README for the schema).")
@click.option("--passphrase", envvar="PROML_PASSPHRASE", required=True,
              help="Wallet passphrase; PROML_PASSPHRASE env var works too.")
@click.option("--verbose", is_flag=True, help="Debug logging.")
def main(config_path: str, passphrase: str, verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    node = Node(NodeConfig.load(config_path), passphrase)
    node.start()
    click.echo(
        f"node {node.address.hex()} up: api={node.config.api_listen} "
        f"p2p={node.config.p2p_listen} role={node.config.role}"
    )
    stop = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: stop.set())
    stop.wait()
    node.stop()


if __name__ == "__main__":
    main()
