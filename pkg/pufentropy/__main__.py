import sys

from pufentropy.cli import main

sys.exit(main())
