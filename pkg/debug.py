from embclust import configure_layout
from embclust.cli import parse_args
configure_layout()

parse_args()
