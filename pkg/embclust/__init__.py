from .log import setup_logging
from .settings import configure_layout  # noqa
from .exceptions import ConfigError, EmbclustError, StageError  # noqa
from .embedding import Embedding, make_embedding  # noqa
from .pipeline import PipelineConfig, load_config, run_ablation, run_pipeline  # noqa

setup_logging()
