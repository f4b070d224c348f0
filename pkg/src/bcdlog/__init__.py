"""Character-level log template extraction via 4-bit group labels.

Messages are labeled character by character as static or variable, four
characters at a time: each 4-character group gets one of 16 classes encoding
its four mask bits. A compact tagger (embedding, residual self-attention,
4-to-1 convolution, BiLSTM, CRF) predicts the label sequence, and a
fixed-depth prefix-tree cache short-circuits repeated message shapes at
inference time.
"""

from .cache import ParseCache, match_template, parse_messages, tokenize
from .crf import LinearChainCRF
from .mask_codec import (
    AlignmentError,
    InvalidDigitError,
    InvalidMaskError,
    LengthMismatchError,
    decode_bcd,
    derive_ground_truth_mask,
    encode_mask,
    mask_from_string,
    mask_to_string,
    pad_to_multiple_of_four,
    render_template,
)
from .metrics import (
    EvalReport,
    ParsedCorpus,
    ParseEntry,
    build_report,
    parameter_mask_agreement,
    parsing_accuracy,
    template_f1,
)
from .model import (
    BcdTagger,
    CheckpointError,
    ModelConfig,
    count_learnable_parameters,
    load_checkpoint,
    predict_mask,
    save_checkpoint,
    tiny_config,
)
from .training import (
    TrainConfig,
    TrainingExample,
    TrainResult,
    build_training_set,
    evaluate_loss,
    train,
)
from .vocab import PAD_ID, UNK_ID, VOCAB_SIZE, Vocabulary, build_vocabulary

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "BcdTagger",
    "CheckpointError",
    "EvalReport",
    "InvalidDigitError",
    "InvalidMaskError",
    "LengthMismatchError",
    "LinearChainCRF",
    "ModelConfig",
    "PAD_ID",
    "ParseCache",
    "ParseEntry",
    "ParsedCorpus",
    "TrainConfig",
    "TrainResult",
    "TrainingExample",
    "UNK_ID",
    "VOCAB_SIZE",
    "Vocabulary",
    "build_report",
    "build_training_set",
    "build_vocabulary",
    "count_learnable_parameters",
    "decode_bcd",
    "derive_ground_truth_mask",
    "encode_mask",
    "evaluate_loss",
    "load_checkpoint",
    "mask_from_string",
    "mask_to_string",
    "match_template",
    "pad_to_multiple_of_four",
    "parameter_mask_agreement",
    "parse_messages",
    "parsing_accuracy",
    "predict_mask",
    "render_template",
    "save_checkpoint",
    "template_f1",
    "tiny_config",
    "tokenize",
    "train",
]
