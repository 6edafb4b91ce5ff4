import sys

from ontocert.cli import main

sys.exit(main())
