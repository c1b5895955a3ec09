"""Depression-signal analytics for short social-media texts.

Pipeline pieces: corpus ingestion and filtering, psycholinguistic lexicons,
four feature families (LIWC-style categories, PLUS psycholinguistic averages,
TF-IDF bigrams, LDA topics), from-scratch supervised models, evaluation
protocols, and cross-period topic similarity.
"""

__version__ = "0.1.0"
