import sys

from cosres.cli import main

sys.exit(main())
