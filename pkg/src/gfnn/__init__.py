"""Graph filter neural networks: graph signal processing, low-pass propagation and small classifiers."""

__version__ = "0.1.0"
