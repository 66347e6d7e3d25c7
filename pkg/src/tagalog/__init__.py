"""Multilingual personalised hashtag recommendation with guided attention
and a graph autoencoder over a user-tweet graph."""

__version__ = "0.1.0"
