"""HTTP service wrapping the experiment drivers."""
