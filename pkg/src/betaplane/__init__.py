"""Single-mode channel shear flow dynamics on the beta-plane.

Evolves one Fourier mode of the linearized vorticity equation, solves the
associated spectral boundary value problem with limiting absorption, computes
discrete spectra, and classifies the closed-form resonance curves of the
cosine-squared profile.
"""

__version__ = "0.1.0"
