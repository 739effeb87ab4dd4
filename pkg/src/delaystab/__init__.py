"""Delay-induced stabilization of the 1-D wave equation with an internal delayed potential.

The package splits into four computational layers plus a service/CLI front:

* ``quasipoly``  -- the modal characteristic function s^2 + beta + alpha*e^(-s*tau):
  evaluation, certified root counting (argument principle), root location, and
  spectral abscissa.
* ``stability``  -- the (tau, alpha) design criterion, crossing frequencies,
  critical delays, and the scaled parameter-plane region chart.
* ``modal``      -- quasimode initial data and a method-of-steps integrator for the
  modal delay ODE, used as an independent oracle, plus decay-rate estimators.
* ``fdtd``       -- explicit finite-difference simulation of the delayed wave
  equation with a delay ring buffer and energy traces.
* ``service``/``cli`` -- FastAPI service wrapping the above, and a thin-client
  command line that writes reproducible CSV/JSON outputs.
"""

__version__ = "0.1.0"
