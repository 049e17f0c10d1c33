"""Configuration, logging and result helpers."""
