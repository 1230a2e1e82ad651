import sys

from patchkpp.manager.cli.service import main

sys.exit(main())
