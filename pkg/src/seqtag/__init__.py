"""seqtag: two-stage neural sequence labeling on numpy.

Stage 1 learns word vectors from raw text (skip-gram with negative
sampling, or GloVe). Stage 2 trains a POS-augmented recurrent tagger
(RNN/LSTM, optionally bidirectional, 1-2 layers) end-to-end with Adam and
dropout, with entity-wise precision/recall/F1 at token and chunk level.
"""

__version__ = "0.1.0"

from .corpus import (
    CONLL,
    IOB2,
    RAW,
    SSF,
    CorpusError,
    Dataset,
    Sentence,
    TagInventory,
    Token,
    Vocabulary,
    build_vocab,
    load_dataset,
    normalize_labels,
    parse_conll,
    parse_ssf,
    random_split,
    serialize,
)
from .embeddings import (
    CooccurrenceTable,
    EmbeddingTable,
    GloveConfig,
    SgnsConfig,
    build_cooccurrence,
    load_vectors,
    nearest_neighbors,
    save_vectors,
    train_glove,
    train_sgns,
)
from .evaluate import (
    EvalReport,
    chunk_prf,
    extract_chunks,
    format_report,
    token_prf,
)
from .nn import (
    Checkpoint,
    NetworkConfig,
    ParamStore,
    SequenceBatch,
    gradient_check,
    init_params,
    network_forward,
    network_forward_backward,
)
from .train import (
    TrainConfig,
    TrainHistory,
    adam_step,
    make_batches,
    predict,
    predict_dataset,
    train_ner,
)
