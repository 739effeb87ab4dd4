"""FastAPI service wrapping the analysis, design, region, simulation, and oracle runs."""
