"""Stage 1: unsupervised word-vector training (skip-gram and GloVe)."""

from .glove import (
    CooccurrenceTable,
    GloveConfig,
    build_cooccurrence,
    glove_objective,
    glove_weight,
    train_glove,
)
from .sgns import (
    NoiseTable,
    SgnsConfig,
    generate_skipgram_pairs,
    subsample_keep_probs,
    train_sgns,
)
from .vectors import (
    EmbeddingTable,
    VectorFileError,
    load_vectors,
    nearest_neighbors,
    random_table,
    save_vectors,
    seeded_row_init,
)
