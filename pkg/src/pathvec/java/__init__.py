"""Java frontend: lexer, recursive-descent parser and scope resolution
for the supported Java subset."""

from .lexer import ParseError, Token, tokenize
from .ast import (
    AstNode,
    ClassDecl,
    MethodDecl,
    SourceUnit,
    VariableBinding,
    UNK_TYPE,
    node_tokens,
    to_source,
)
from .parser import parse_file
from .bindings import resolve_bindings

__all__ = [
    "AstNode",
    "ClassDecl",
    "MethodDecl",
    "ParseError",
    "SourceUnit",
    "Token",
    "UNK_TYPE",
    "VariableBinding",
    "node_tokens",
    "parse_file",
    "resolve_bindings",
    "to_source",
    "tokenize",
]
