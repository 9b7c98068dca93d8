"""topicstream: online topic tracking over time-sliced document streams.

Trains one LDA model per time slice with an adaptively combined
topic-word prior built from a window of past slices, flags emerging
topics by per-topic Jensen-Shannon divergence, labels topics with
ranked phrases and quality-scored posts, and exports stream-graph and
feature data.
"""

__version__ = "0.1.0"

from .errors import ConfigError, InvariantError, TopicStreamError

__all__ = ["ConfigError", "InvariantError", "TopicStreamError", "__version__"]
