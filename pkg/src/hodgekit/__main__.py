import sys

from hodgekit.cli import main

sys.exit(main())
