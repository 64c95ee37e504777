"""segtopics: topic segmentation engine and evaluation harness.

Modules: corpus (manifests, blocks, labels, splits), embedio (EMB1 container),
texttiling (non-neural baseline), seghead (trainable attention head), metrics
(Pk / WinDiff / SPCF), synth (planted-truth oracles), cli (command line).
"""

__version__ = "0.1.0"
