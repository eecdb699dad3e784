"""storyribbons: LLM-assisted narrative structure extraction and serving."""

__version__ = "0.1.0"
