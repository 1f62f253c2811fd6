import sys

from cab.cli import main

sys.exit(main())
