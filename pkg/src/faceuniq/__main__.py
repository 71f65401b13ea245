import sys

from faceuniq.cli import main

sys.exit(main())
