"""Design-space exploration for 2.5D chiplet accelerators on silicon and glass interposers."""

__version__ = "0.1.0"
