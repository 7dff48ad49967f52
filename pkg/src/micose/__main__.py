import sys

from micose.cli import main

sys.exit(main())
