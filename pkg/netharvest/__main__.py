import sys

from netharvest.cli import main

sys.exit(main())
