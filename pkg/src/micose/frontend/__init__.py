"""Structured Text frontend: lexer, statement parser, item inventory."""
from micose.frontend.inventory import ItemInventory, extract_inventory
from micose.frontend.lexer import Token, count_sloc, tokenize
from micose.frontend.model import Declaration, Diagnostic, Pou, SourceUnit, Statement
from micose.frontend.parser import parse_pou, split_pous

__all__ = [
    "Declaration", "Diagnostic", "ItemInventory", "Pou", "SourceUnit", "Statement", "Token",
    "count_sloc", "extract_inventory", "parse_pou", "split_pous", "tokenize",
]
