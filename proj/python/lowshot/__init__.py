"""Low-shot classification with imprinted cosine-classifier weights.

Thin bindings over the C++ library. Datasets keep examples as matrix
columns, the same layout the C++ side uses.
"""

from ._lowshot import *  # noqa: F401,F403
from ._lowshot import LowshotError, __doc__  # noqa: F401
