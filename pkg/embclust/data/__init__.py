from .dataset import Dataset, PreprocessSpec, make_dataset, preprocess, remap_labels  # noqa
from .idx import load_idx, write_idx  # noqa
from .registry import DATASETS, load_named  # noqa
from .tabular import load_csv  # noqa
