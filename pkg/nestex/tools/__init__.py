from .registry import CommandRegistry, Command, CommandResult, CommandContext, build_command_registry
from .commands import command_registry

__all__ = ['command_registry', 'CommandRegistry', 'Command', 'CommandResult', 'CommandContext', 'build_command_registry']
