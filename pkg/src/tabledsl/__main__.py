import sys

from tabledsl.cli import main

sys.exit(main())
