import sys

from telesim.cli import main

sys.exit(main())
