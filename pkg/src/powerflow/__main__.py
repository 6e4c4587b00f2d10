import sys

from powerflow.cli import main

sys.exit(main())
