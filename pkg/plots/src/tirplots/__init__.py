"""Figure rendering for simulator data exports."""

from .render import (FieldGrid, PlotJob, SchemaError, STYLES, load_bernoulli,
                     load_field_grid, load_streamlines, load_vortices, render)

__version__ = "0.1.0"
