import sys

from nestex.ui.cli import dispatch

sys.exit(dispatch())
