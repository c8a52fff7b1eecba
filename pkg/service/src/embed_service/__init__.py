"""Embedding-inference service speaking a small JSON protocol.

POST /embed with ``{"modality", "is_goal", "payload"}`` returns
``{"embedding", "dim", "model"}``; GET /info lists the served modalities
and their dimensions.  The default encoders are deterministic and
dependency-light; pretrained encoders can be swapped in per modality when
their checkpoints are available locally.
"""

from .config import ServiceConfig
from .models import EncoderRegistry, build_registry

__version__ = "0.1.0"

__all__ = ["ServiceConfig", "EncoderRegistry", "build_registry", "__version__"]
