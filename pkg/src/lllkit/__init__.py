"""Constructive local-lemma toolkit: resampling, witness trees and applications."""

__version__ = "0.1.0"
