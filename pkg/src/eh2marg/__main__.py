"""Allow ``python -m eh2marg``."""

import sys

from .cli import main

sys.exit(main())
