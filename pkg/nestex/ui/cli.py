import argparse
import sys
import textwrap
from typing import Optional, Sequence, TextIO

from ..tools import CommandRegistry, command_registry
from ..utils.errors import EXIT_OK, EXIT_USAGE, UsageError
from ..utils.helpers import setup_logging

# ========== UI Helpers ==========
RESET = "\033[0m"


def _use_color(stream: TextIO) -> bool:
    return hasattr(stream, "isatty") and stream.isatty()


def hr(char="─", width=80):
    return char * width


def box(title: str, body: str, width: int = 80) -> str:
    title = f" {title} "
    top    = f"┌{hr('─', width-2)}┐"
    midttl = f"│{title[:width-2].ljust(width-2)}│"
    sep    = f"├{hr('─', width-2)}┤"
    lines = []
    for line in body.splitlines() or [""]:
        for wrapped in textwrap.wrap(line, width=width-4) or [""]:
            lines.append(f"│ {wrapped.ljust(width-3)}│")
    bot    = f"└{hr('─', width-2)}┘"
    return "\n".join([top, midttl, sep, *lines, bot])


def color_text(text, color_code, enabled=True):
    return f"\033[{color_code}m{text}{RESET}" if enabled else text


def status(label: str, msg: str, color="36", enabled=True):  # default cyan
    return f"{color_text(f'[{label}]', color, enabled)} {msg}"


# ========== Argument parsing ==========
class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so dispatch owns the exit status."""

    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage().strip()}")


def build_parser(registry: CommandRegistry) -> argparse.ArgumentParser:
    parser = _Parser(prog="nestex", description="Nested event extraction: train, predict, evaluate, generate.",
                     epilog=registry.list_commands(), formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    for command in registry.commands.values():
        command.add_arguments(sub.add_parser(command.name, help=command.description,
                                             description=command.description))
    return parser


def dispatch(argv: Optional[Sequence[str]] = None, registry: Optional[CommandRegistry] = None,
             stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
    """Runs one subcommand and returns its exit status (0 ok, 1 usage, 2 invalid input, 3 numeric)."""
    registry = registry or command_registry
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser(registry)
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except UsageError as e:
        print(status("USAGE", str(e), "33", _use_color(stderr)), file=stderr)
        return EXIT_USAGE
    if not args.command:
        print(parser.format_usage().strip(), file=stderr)
        print(box("Commands", registry.list_commands()), file=stderr)
        return EXIT_USAGE

    setup_logging(args.verbose)
    result = registry.get_command(args.command).run(args, registry.get_context())
    if result.ok:
        if result.output:
            print(result.output, file=stdout)
        return EXIT_OK
    print(status("ERR", result.output, "31", _use_color(stderr)), file=stderr)
    return result.code or EXIT_USAGE

