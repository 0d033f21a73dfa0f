from .metrics import (ContingencyTable, LabelLengthMismatch, MetricsReport,  # noqa
                      accuracy, assignment_cost, contingency, evaluate, hungarian, nmi)
from .timing import StageTimer, StageTiming, stage_timer  # noqa
