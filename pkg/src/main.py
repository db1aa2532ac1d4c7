import logging
import sys
from typing import List, Optional

from src.cli.command_manager import CommandManager
from src.config import settings


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=settings.LOG_LEVEL, format=settings.LOG_FORMAT, stream=sys.stderr)
    return CommandManager().run(argv)

if __name__ == "__main__":
    sys.exit(main())
