#!/usr/bin/env python3
import sys

from gia_lab.experiments.cli import main as cli_main


def main():
    """Console entry point."""
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == '__main__':
    main()
