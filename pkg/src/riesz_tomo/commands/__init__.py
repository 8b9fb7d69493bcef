"""riesz-tomo command modules.

Importing this package imports each submodule in turn, which causes their
``@registry.command`` decorators to register commands on the shared
:data:`riesz_tomo.cli.registry`.
"""

from . import fields  # noqa: F401
from . import lemma  # noqa: F401
from . import experiments  # noqa: F401
