import os

from cdspress.domain import Defaults

defaults = Defaults(dict(os.environ))
