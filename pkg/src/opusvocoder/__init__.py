"""Neural re-synthesis of wideband speech from Opus/SILK decoder parameters."""

__version__ = "0.1.0"
