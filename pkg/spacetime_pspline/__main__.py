import sys

from spacetime_pspline.cli import main

sys.exit(main())
