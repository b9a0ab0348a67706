import sys

from ncglab.cli import main

sys.exit(main())
