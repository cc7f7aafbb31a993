import argparse
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

from nestex.utils.errors import EXIT_OK, NestexError, exit_code


@dataclass
class CommandContext:
    workspace_path: str = field(default_factory=os.getcwd)

    def resolve(self, path: str) -> str:
        return os.path.abspath(os.path.join(self.workspace_path, path))


@dataclass
class CommandResult:
    ok: bool
    output: str
    code: int = EXIT_OK


CommandFn = Callable[[argparse.Namespace, CommandContext], CommandResult]
ArgumentsFn = Callable[[argparse.ArgumentParser], None]


def _no_arguments(parser: argparse.ArgumentParser) -> None:
    pass


@dataclass
class Command:
    name: str
    description: str
    fn: CommandFn
    add_arguments: ArgumentsFn = _no_arguments

    def run(self, args: argparse.Namespace, context: CommandContext) -> CommandResult:
        # library errors become a failed result with the matching exit status
        try:
            return self.fn(args, context)
        except (NestexError, OSError) as e:
            return CommandResult(ok=False, output=str(e), code=exit_code(e))


class CommandRegistry:
    def __init__(self, context: Optional[CommandContext] = None):
        self.commands: Dict[str, Command] = {}
        self.context = context or CommandContext()

    def register(self, command: Command) -> None:
        if command.name in self.commands:
            raise ValueError(f"command {command.name} registered twice")
        self.commands[command.name] = command

    def get_command(self, name: str) -> Command:
        if name in self.commands:
            return self.commands[name]
        raise KeyError(f"Unknown command: {name}")

    def list_commands(self) -> str:
        ans = ""
        for command in self.commands.values():
            ans += f"{command.name:<10} {command.description}\n"
        return ans.strip() if ans else "No commands registered."

    def get_context(self) -> CommandContext:
        return self.context


def build_command_registry(command_dict: Dict[str, Command],
                           context: Optional[CommandContext] = None) -> CommandRegistry:
    registry = CommandRegistry(context)
    for command in command_dict.values():
        registry.register(command)
    return registry
