import sys

from cvarkit.cli import main

sys.exit(main())
