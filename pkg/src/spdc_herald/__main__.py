import sys

from spdc_herald.cli import main

sys.exit(main())
