"""Era classification of Arabic literary texts.

A library and CLI for assigning historical time periods (Hijri-calendar
eras) to Arabic prose and poetry: corpus ingestion, deterministic text
preprocessing, era schemes and custom year bins, author-aware dataset
splitting, BoW/TF-IDF/sequence features, from-scratch neural and linear
classifiers, and an evaluation suite with significance intervals.
"""

__version__ = "0.1.0"
