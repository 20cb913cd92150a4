"""Art style classification and artist-influence analysis toolkit.

Modules:

- ``core``: style classes, painting manifests, cleaning and splitting
- ``nnet``: a small numpy CNN with a 512-wide feature head, Grad-CAM and
  filter visualization
- ``evaluation``: accuracy, confusion matrices and misclassification reports
- ``embed``: painting embeddings, artist profiles, distances
- ``tsne``: exact t-SNE
- ``graph``: maximum-similarity artist networks and chronological lineage
- ``plotting``: matplotlib figures written next to the delimited outputs
- ``cli``: the ``artinfluence`` command line
"""

__version__ = "0.1.0"
