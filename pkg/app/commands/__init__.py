# Subcommands of the hedge-tenor CLI, in help order
from app.commands import allocate, backtest, calibrate, sensitivity, simulate

COMMANDS = (calibrate, allocate, sensitivity, simulate, backtest)
