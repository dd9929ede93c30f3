"""Stdio transport entry point for the BetaPress MCP server."""

from ._helpers import configure_logging
from .params import resolve_log_level
from .server import create_server


def main():
    """Run the BetaPress MCP server over stdio transport."""
    configure_logging(resolve_log_level(default="INFO"))
    create_server().run()


if __name__ == "__main__":
    main()
