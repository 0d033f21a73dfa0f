from .ablation import ABLATION_ROWS, DASH, run_ablation, run_baselines, summarize  # noqa
from .config import (AeSettings, DataConfig, PipelineConfig, config_from_dict,  # noqa
                     config_to_dict, load_config)
from .runner import Pipeline, RunReport, load_dataset, run_pipeline  # noqa
from .visualization import export_visualization  # noqa
