import sys

from gptcloak.cli import main

sys.exit(main())
