"""Privacy-aware quantum-classical augmented networking toolkit.

Modules: ``frame`` (Q-HTTP hybrid frame codec), ``corpus`` (synthetic
private/non-private emails), ``features`` (TF-IDF), ``classifier``
(logistic regression), ``metrics``, ``qkd`` (BB84 simulation and one-time
pad), ``network`` (three-stage simulator), ``report`` (resource experiment)
and ``cli``.
"""

__version__ = "0.1.0"
