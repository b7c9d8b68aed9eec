from . import immse_check, overlap, second_moment, sweep, verify

COMMANDS = (sweep, overlap, second_moment, immse_check, verify)

__all__ = ["COMMANDS"]
