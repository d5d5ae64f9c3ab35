"""Risk measures on finite probability spaces and checks of their envelope representations."""

__version__ = "0.1.0"
