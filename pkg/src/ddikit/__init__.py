"""ddikit: drug-drug interaction event prediction from BRICS motif
sequences with image-biased transformer attention."""

__version__ = "0.1.0"
