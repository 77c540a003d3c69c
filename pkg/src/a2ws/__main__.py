import sys

from .benchcli import main

sys.exit(main())
