"""segtopics-encode: write one embedding per block into EMB1 files.

The engine consumes embeddings only through the EMB1 byte layout, so this
adapter stands alone: it reimplements that layout and the 10-second block
window rule rather than importing the engine.
"""

__version__ = "0.1.0"
