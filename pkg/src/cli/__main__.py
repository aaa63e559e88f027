# src/cli/__main__.py

import sys

from src.cli.main import main

sys.exit(main())
