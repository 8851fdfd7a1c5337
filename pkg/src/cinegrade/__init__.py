"""cinegrade: agentic color grading engine.

Log footage in; ASC-CDL parameters, .cube LUTs, and an iterative
natural-language refinement loop out.
"""

__version__ = "0.1.0"
