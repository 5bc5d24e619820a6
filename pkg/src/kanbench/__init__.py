"""kanbench: KAN vs MLP benchmarks on regular, irregular and noisy functions."""

__version__ = "0.1.0"
