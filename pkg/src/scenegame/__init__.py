"""Adversarial scene-manipulation games against black-box visual question
answering players: scene graphs, functional-program questions, constraint
enforcers, an actor-critic adversary, search baselines, metrics and reports.
"""

from .scene import (
    AttributeVocab,
    DEFAULT_GRID,
    DEFAULT_VOCAB,
    Displacement,
    GridSpec,
    SceneGraph,
    SceneObject,
    TokenSequence,
    apply_displacement,
    bin_center,
    compute_relation,
    discretize,
    load_scenes,
    save_scenes,
    tokenize,
)
from .programs import (
    Answer,
    FUNCTION_CATALOG,
    FunctionalProgram,
    ProgramNode,
    QuestionRecord,
    UNDETERMINED,
    answer_equal,
    execute,
    load_questions,
    save_questions,
    validate,
)
from .enforcers import (
    DEFAULT_CONSTRAINTS,
    SceneConstraintConfig,
    Violation,
    check_question_relevance,
    check_scene,
    scene_is_valid,
    visibility_proxy,
)
from .policy import (
    PolicyConfig,
    PolicyParameters,
    action_space_size,
    forward,
    init_policy,
    load_checkpoint,
    sample,
    save_checkpoint,
)
from .players import (
    ConstantPlayer,
    ExternalPlayerHandle,
    FlawSpec,
    FlawedPlayer,
    OraclePlayer,
    PlayerHandle,
    audit_transcript,
)
from .game import (
    DEFAULT_REWARDS,
    ExhaustiveResult,
    GameItem,
    MiniGame,
    RewardConfig,
    RoundRecord,
    TrainConfig,
    build_minigames,
    calc_reward,
    evaluate,
    exhaustive_search,
    make_item,
    play_round,
    random_search,
    train,
)
from .metrics import (
    GameMetrics,
    aggregate,
    consistency_and_drop,
    one_sample_t_test,
    relative_drop,
)
from .generator import generate_questions, generate_scenes, question_vocabulary
from .viz import Series, render_chart, render_topdown

__version__ = "0.1.0"
