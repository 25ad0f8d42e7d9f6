import sys

from qgrank.cli import main

sys.exit(main())
