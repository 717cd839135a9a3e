import sys

from amisc.studio.cli import main

sys.exit(main())
