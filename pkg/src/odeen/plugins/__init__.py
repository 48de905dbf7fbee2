"""Built-in stdio plugins, runnable as python -m odeen.plugins.<name>."""
