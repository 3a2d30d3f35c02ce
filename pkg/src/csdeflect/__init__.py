"""Compressive schlieren deflectometry: sensing, reconstruction and spot localization."""

__version__ = "0.1.0"
