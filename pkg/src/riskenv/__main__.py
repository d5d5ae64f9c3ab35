import sys

from riskenv.cli import main

sys.exit(main())
