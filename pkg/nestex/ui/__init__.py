from .cli import dispatch, build_parser

__all__ = ['dispatch', 'build_parser']
