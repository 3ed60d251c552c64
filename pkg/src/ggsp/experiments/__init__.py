"""Synthetic generators, framework pipelines and the experiment runner."""
