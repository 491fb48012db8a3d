"""Exact tools for kernel mean embeddings of product kernels on finite spaces."""

__version__ = "0.1.0"
