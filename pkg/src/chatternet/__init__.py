"""ChatterNet: chatter-intensity prediction from news and discussion streams.

The package couples two timestamped input streams (external news articles
and community submissions) with a comment-event stream, and learns to
predict the log comment volume a submission will attract, without any
knowledge of the user network.
"""

__version__ = "0.1.0"

from chatternet.errors import ConfigurationError, DataError, NumericalError

__all__ = ["ConfigurationError", "DataError", "NumericalError", "__version__"]
