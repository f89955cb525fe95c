import sys

from subshot.cli import main

sys.exit(main())
