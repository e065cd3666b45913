"""Fake/real news classification from article text and publisher history."""

from .corpus import (
    ArticleTensor,
    EmbeddingTable,
    Label,
    NewsArticle,
    Thresholds,
    TokenizedArticle,
    build_tensor,
    compute_thresholds,
    load_corpus,
    load_embeddings,
    split_article,
)
from .fusion import Model, VARIANTS, classify, init_model, integrate
from .pipeline import (
    EvalReport,
    RunConfig,
    SynthSpec,
    ablate,
    cold_start_perturb,
    coldstart_experiment,
    eval_report,
    evaluate,
    export_stats,
    gen_synthetic,
    load_config,
    prepare_data,
    train,
)
from .slcnn import SlcnnModel, required_hcbs, slcnn_forward, width_trace
from .social import (
    CreditLedger,
    FollowerGraph,
    follower_count_influence,
    level_followers,
    tally_credit,
    user_influence,
)

__version__ = "0.1.0"
