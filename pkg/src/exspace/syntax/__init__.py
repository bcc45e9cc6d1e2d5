"""Lexing, preprocessing, and parsing of MiniCU units."""
from .lexer import LexError, Token, tokenize
from .nodes import Ast, unparse
from .parser import ParseError, parse
from .preprocess import (
    BUILTIN_MACROS,
    DEVICE_PASS,
    HOST_PASS,
    CompileProfile,
    PpPass,
    PreprocessorError,
    preprocess,
)

__all__ = [
    "Ast",
    "BUILTIN_MACROS",
    "CompileProfile",
    "DEVICE_PASS",
    "HOST_PASS",
    "LexError",
    "ParseError",
    "PpPass",
    "PreprocessorError",
    "Token",
    "parse",
    "preprocess",
    "tokenize",
    "unparse",
]
