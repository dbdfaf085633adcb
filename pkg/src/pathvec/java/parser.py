"""Recursive-descent parser for the supported Java subset.

Supported: class declarations, fields, methods with typed parameters,
local variable declarations, assignment (plain and compound), if/else,
while, for, return, unary/binary/ternary expressions, method invocation,
field access, literals, increment/decrement, plus package/import headers.

Everything else (generics, lambdas, inner classes, annotations,
constructors, object creation, arrays subscripts, try/switch/do, ...)
raises ParseError; batch drivers log and skip the file.
"""

from __future__ import annotations

from .ast import AstNode, ClassDecl, MethodDecl, SourceUnit
from .lexer import PRIMITIVE_TYPES, ParseError, Token, tokenize

_MODIFIERS = frozenset(
    {"public", "private", "protected", "static", "final", "abstract",
     "native", "synchronized", "transient", "volatile", "strictfp"}
)
_ASSIGN_OPS = frozenset(
    {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="}
)
_BINARY_OPS = {
    "||": 3, "&&": 4, "|": 5, "^": 6, "&": 7,
    "==": 8, "!=": 8, "<": 9, ">": 9, "<=": 9, ">=": 9,
    "<<": 10, ">>": 10, ">>>": 10,
    "+": 11, "-": 11, "*": 12, "/": 12, "%": 12,
}
_UNSUPPORTED_STMT = frozenset(
    {"try", "switch", "do", "throw", "break", "continue", "synchronized",
     "assert", "super"}
)
_LITERAL_KINDS = {
    "int": "IntegerLiteralExpr",
    "float": "DoubleLiteralExpr",
    "string": "StringLiteralExpr",
    "char": "CharLiteralExpr",
}


def parse_file(text: str, path: str = "<memory>") -> SourceUnit:
    """Parse Java source into a SourceUnit with resolved bindings."""
    tokens = tokenize(text)
    unit = _Parser(tokens, text, path).parse_unit()
    from .bindings import resolve_bindings

    resolve_bindings(unit)
    return unit


class _Parser:
    def __init__(self, tokens: list[Token], text: str, path: str):
        self.tokens = tokens
        self.text = text
        self.path = path
        self.pos = 0

    # -- token plumbing --------------------------------------------------

    def cur(self) -> Token:
        return self.tokens[self.pos]

    def at(self, text: str) -> bool:
        return self.cur().text == text and self.cur().kind != "eof"

    def at_kind(self, kind: str) -> bool:
        return self.cur().kind == kind

    def peek(self, offset: int = 1) -> Token:
        idx = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[idx]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            return self.advance()
        return None

    def expect(self, text: str, what: str = "") -> Token:
        if not self.at(text):
            want = what or f"'{text}'"
            raise self.error(f"expected {want}, found {self._describe()}")
        return self.advance()

    def error(self, message: str) -> ParseError:
        return ParseError(self.cur().line, message)

    def _describe(self) -> str:
        tok = self.cur()
        return "end of file" if tok.kind == "eof" else f"'{tok.text}'"

    def _span_from(self, start_idx: int) -> tuple[int, int]:
        last = self.tokens[max(start_idx, self.pos - 1)]
        return (self.tokens[start_idx].line, last.line)

    def _leaf(self, kind: str, tok: Token, idx: int) -> AstNode:
        return AstNode(kind, token=tok.text, span=(tok.line, tok.line), token_index=idx)

    # -- compilation unit ------------------------------------------------

    def parse_unit(self) -> SourceUnit:
        meta: dict = {"package": None, "imports": []}
        if self.at("package"):
            self.advance()
            meta["package"] = self._qualified_name()
            self.expect(";")
        while self.at("import"):
            self.advance()
            name = self._qualified_name()
            if self.accept("."):
                self.expect("*")
                name += ".*"
            meta["imports"].append(name)
            self.expect(";")

        classes: list[ClassDecl] = []
        start = self.pos
        while not self.at_kind("eof"):
            classes.append(self._class_decl())
        root = AstNode(
            "CompilationUnit",
            children=[c.node for c in classes],
            span=self._span_from(start) if classes else (1, 1),
            meta=meta,
        )
        if not classes:
            root.token = "<empty>"
        return SourceUnit(
            path=self.path,
            text=self.text,
            classes=classes,
            root=root,
            tokens=self.tokens[:-1],
        )

    def _qualified_name(self) -> str:
        parts = [self._expect_ident("name")]
        while self.at(".") and self.peek().kind == "ident":
            self.advance()
            parts.append(self.advance().text)
        return ".".join(parts)

    def _expect_ident(self, what: str) -> str:
        if not self.at_kind("ident"):
            raise self.error(f"expected {what}, found {self._describe()}")
        return self.advance().text

    def _modifiers(self) -> list[str]:
        mods: list[str] = []
        while self.cur().kind == "keyword" and self.cur().text in _MODIFIERS:
            mods.append(self.advance().text)
        return mods

    # -- declarations ----------------------------------------------------

    def _class_decl(self) -> ClassDecl:
        start = self.pos
        mods = self._modifiers()
        if self.at("@"):
            raise self.error("annotations are not supported")
        if self.at("interface") or self.at("enum"):
            raise self.error(f"'{self.cur().text}' declarations are not supported")
        self.expect("class")
        name = self._expect_ident("class name")
        if self.at("<"):
            raise self.error("generic type parameters are not supported")
        if self.at("extends") or self.at("implements"):
            raise self.error(f"'{self.cur().text}' clauses are not supported")
        self.expect("{")

        members: list[AstNode] = []
        methods: list[MethodDecl] = []
        while not self.at("}"):
            if self.at_kind("eof"):
                raise self.error("unterminated class body")
            member = self._member(methods)
            members.append(member)
        self.expect("}")

        node = AstNode(
            "ClassOrInterfaceDeclaration",
            children=members,
            span=self._span_from(start),
            meta={"name": name, "modifiers": mods},
        )
        if not members:
            node.token = name  # childless declarations still carry a token
        return ClassDecl(name=name, node=node, methods=methods)

    def _member(self, methods: list[MethodDecl]) -> AstNode:
        start = self.pos
        mods = self._modifiers()
        if self.at("@"):
            raise self.error("annotations are not supported")
        if self.at("class") or self.at("interface") or self.at("enum"):
            raise self.error("inner classes are not supported")
        type_text, type_leaf = self._type(allow_void=True)
        if self.at("("):
            raise self.error("constructors are not supported")
        name_idx = self.pos
        name = self._expect_ident("member name")
        if self.at("("):
            return self._method_rest(start, mods, type_text, type_leaf, name, methods)
        if type_text == "void":
            raise self.error("fields cannot have type void")
        return self._field_rest(start, mods, type_leaf, name_idx)

    def _method_rest(
        self,
        start: int,
        mods: list[str],
        return_type: str,
        type_leaf: AstNode,
        name: str,
        methods: list[MethodDecl],
    ) -> AstNode:
        self.expect("(")
        params: list[AstNode] = []
        if not self.at(")"):
            while True:
                params.append(self._parameter())
                if not self.accept(","):
                    break
        self.expect(")")
        if self.at("throws"):
            raise self.error("'throws' clauses are not supported")
        if not self.at("{"):
            raise self.error("method body required")
        body = self._block()
        node = AstNode(
            "MethodDeclaration",
            children=[type_leaf, *params, body],
            span=self._span_from(start),
            meta={"name": name, "modifiers": mods},
        )
        line_count = node.span[1] - node.span[0] + 1
        methods.append(
            MethodDecl(
                name=name,
                params=[],
                body=body,
                line_count=line_count,
                node=node,
                return_type=return_type,
            )
        )
        return node

    def _field_rest(
        self, start: int, mods: list[str], type_leaf: AstNode, first_name_idx: int
    ) -> AstNode:
        declarators = [self._declarator_rest(first_name_idx)]
        while self.accept(","):
            name_idx = self.pos
            self._expect_ident("field name")
            declarators.append(self._declarator_rest(name_idx))
        self.expect(";")
        return AstNode(
            "FieldDeclaration",
            children=[type_leaf, *declarators],
            span=self._span_from(start),
            meta={"modifiers": mods},
        )

    def _declarator_rest(self, name_idx: int) -> AstNode:
        name_tok = self.tokens[name_idx]
        name_leaf = self._leaf("NameExpr", name_tok, name_idx)
        children = [name_leaf]
        if self.at(":"):
            raise self.error("enhanced for loops are not supported")
        if self.accept("="):
            children.append(self._expression())
        span = (name_tok.line, self.tokens[self.pos - 1].line)
        return AstNode("VariableDeclarator", children=children, span=span)

    def _parameter(self) -> AstNode:
        start = self.pos
        self._modifiers()  # permit 'final' on parameters
        _, type_leaf = self._type(allow_void=False)
        name_idx = self.pos
        name = self._expect_ident("parameter name")
        name_leaf = self._leaf("NameExpr", self.tokens[name_idx], name_idx)
        return AstNode(
            "Parameter",
            children=[type_leaf, name_leaf],
            span=self._span_from(start),
        )

    def _type(self, allow_void: bool) -> tuple[str, AstNode]:
        start = self.pos
        tok = self.cur()
        if tok.kind == "keyword" and tok.text in PRIMITIVE_TYPES:
            base = self.advance().text
            primitive = True
        elif tok.kind == "keyword" and tok.text == "void":
            if not allow_void:
                raise self.error("'void' is only valid as a return type")
            self.advance()
            leaf = AstNode(
                "PrimitiveType", token="void", span=(tok.line, tok.line), token_index=start
            )
            return "void", leaf
        elif tok.kind == "ident":
            base = self._qualified_name()
            primitive = False
        else:
            raise self.error(f"expected a type, found {self._describe()}")
        if self.at("<"):
            raise self.error("generic types are not supported")
        dims = 0
        while self.at("["):
            self.advance()
            self.expect("]")
            dims += 1
        text = base + "[]" * dims
        kind = "ArrayType" if dims else ("PrimitiveType" if primitive else "ClassOrInterfaceType")
        leaf = AstNode(
            kind,
            token=text,
            span=(tok.line, self.tokens[self.pos - 1].line),
            token_index=start,
        )
        return text, leaf

    # -- statements ------------------------------------------------------

    def _block(self) -> AstNode:
        start = self.pos
        self.expect("{")
        stmts: list[AstNode] = []
        while not self.at("}"):
            if self.at_kind("eof"):
                raise self.error("unterminated block")
            stmt = self._statement()
            if stmt is not None:
                stmts.append(stmt)
        self.expect("}")
        node = AstNode("BlockStmt", children=stmts, span=self._span_from(start))
        if not stmts:
            node.token = "{}"
        return node

    def _statement(self) -> AstNode | None:
        """Parse one statement; empty statements (bare ';') yield None."""
        if self.accept(";"):
            return None
        if self.at("{"):
            return self._block()
        tok = self.cur()
        if tok.kind == "keyword":
            word = tok.text
            if word == "if":
                return self._if_stmt()
            if word == "while":
                return self._while_stmt()
            if word == "for":
                return self._for_stmt()
            if word == "return":
                return self._return_stmt()
            if word in _UNSUPPORTED_STMT:
                raise self.error(f"'{word}' statements are not supported")
            if word == "class":
                raise self.error("local classes are not supported")
            if word in PRIMITIVE_TYPES or word == "final":
                return self._local_decl_stmt()
            if word in ("this", "true", "false", "null", "new"):
                return self._expression_stmt()
            raise self.error(f"unsupported statement starting with '{word}'")
        if tok.kind == "punct" and tok.text == "@":
            raise self.error("annotations are not supported")
        if tok.kind == "ident":
            self._reject_generic_decl()
            if self._looks_like_decl():
                return self._local_decl_stmt()
        return self._expression_stmt()

    def _required_statement(self, context: str) -> AstNode:
        stmt = self._statement()
        if stmt is None:
            raise self.error(f"empty statement not allowed as {context}")
        return stmt

    def _reject_generic_decl(self) -> None:
        # ident '<' ident ... '>' ident  is a generic declaration, not math
        if self.peek().text != "<":
            return
        i = self.pos + 2
        depth = 1
        steps = 0
        while depth and steps < 24 and self.tokens[i].kind != "eof":
            text = self.tokens[i].text
            if text == "<":
                depth += 1
            elif text == ">":
                depth -= 1
            elif text not in (",", ".", "[", "]") and self.tokens[i].kind not in ("ident", "keyword"):
                return
            i += 1
            steps += 1
        if depth == 0 and self.tokens[i].kind == "ident":
            raise self.error("generic types are not supported")

    def _looks_like_decl(self) -> bool:
        i = self.pos
        toks = self.tokens
        if toks[i].kind not in ("ident",):
            return False
        i += 1
        while toks[i].text == "." and toks[i + 1].kind == "ident":
            i += 2
        while toks[i].text == "[" and toks[i + 1].text == "]":
            i += 2
        return toks[i].kind == "ident"

    def _local_decl_stmt(self) -> AstNode:
        start = self.pos
        decl = self._var_decl_expr()
        self.expect(";")
        return AstNode(
            "ExpressionStmt", children=[decl], span=self._span_from(start)
        )

    def _var_decl_expr(self) -> AstNode:
        start = self.pos
        mods = self._modifiers()
        _, type_leaf = self._type(allow_void=False)
        declarators = []
        while True:
            name_idx = self.pos
            self._expect_ident("variable name")
            declarators.append(self._declarator_rest(name_idx))
            if not self.accept(","):
                break
        return AstNode(
            "VariableDeclarationExpr",
            children=[type_leaf, *declarators],
            span=self._span_from(start),
            meta={"modifiers": mods} if mods else None,
        )

    def _if_stmt(self) -> AstNode:
        start = self.pos
        self.expect("if")
        self.expect("(")
        cond = self._expression()
        self.expect(")")
        then = self._required_statement("an if branch")
        children = [cond, then]
        if self.accept("else"):
            children.append(self._required_statement("an else branch"))
        return AstNode("IfStmt", children=children, span=self._span_from(start))

    def _while_stmt(self) -> AstNode:
        start = self.pos
        self.expect("while")
        self.expect("(")
        cond = self._expression()
        self.expect(")")
        body = self._required_statement("a loop body")
        return AstNode("WhileStmt", children=[cond, body], span=self._span_from(start))

    def _for_stmt(self) -> AstNode:
        start = self.pos
        self.expect("for")
        self.expect("(")
        init: list[AstNode] = []
        if not self.at(";"):
            tok = self.cur()
            is_decl = (
                (tok.kind == "keyword" and (tok.text in PRIMITIVE_TYPES or tok.text == "final"))
                or (tok.kind == "ident" and self._looks_like_decl())
            )
            if is_decl:
                init.append(self._var_decl_expr())
            else:
                init.append(self._expression())
                while self.accept(","):
                    init.append(self._expression())
        self.expect(";")
        cond = None
        if not self.at(";"):
            cond = self._expression()
        self.expect(";")
        update: list[AstNode] = []
        if not self.at(")"):
            update.append(self._expression())
            while self.accept(","):
                update.append(self._expression())
        self.expect(")")
        body = self._required_statement("a loop body")
        children = [*init, *([cond] if cond is not None else []), *update, body]
        return AstNode(
            "ForStmt",
            children=children,
            span=self._span_from(start),
            meta={"n_init": len(init), "has_cond": cond is not None, "n_update": len(update)},
        )

    def _return_stmt(self) -> AstNode:
        start = self.pos
        self.expect("return")
        children: list[AstNode] = []
        if not self.at(";"):
            children.append(self._expression())
        self.expect(";")
        node = AstNode("ReturnStmt", children=children, span=self._span_from(start))
        if not children:
            node.token = "return"
        return node

    def _expression_stmt(self) -> AstNode:
        start = self.pos
        expr = self._expression()
        self.expect(";", "';' after expression")
        return AstNode("ExpressionStmt", children=[expr], span=self._span_from(start))

    # -- expressions -----------------------------------------------------

    def _expression(self) -> AstNode:
        left = self._ternary()
        if self.cur().kind == "punct" and self.cur().text in _ASSIGN_OPS:
            op = self.advance().text
            right = self._expression()
            return AstNode(
                "AssignExpr",
                children=[left, right],
                span=(left.span[0], right.span[1]),
                meta={"op": op},
            )
        return left

    def _ternary(self) -> AstNode:
        cond = self._binary(0)
        if not self.at("?"):
            return cond
        self.advance()
        then = self._expression()
        self.expect(":")
        other = self._ternary()
        return AstNode(
            "ConditionalExpr",
            children=[cond, then, other],
            span=(cond.span[0], other.span[1]),
        )

    def _binary(self, min_prec: int) -> AstNode:
        left = self._unary()
        while True:
            tok = self.cur()
            if tok.kind != "punct":
                return left
            prec = _BINARY_OPS.get(tok.text, -1)
            if prec < min_prec or prec < 0:
                return left
            op = self.advance().text
            right = self._binary(prec + 1)
            left = AstNode(
                "BinaryExpr",
                children=[left, right],
                span=(left.span[0], right.span[1]),
                meta={"op": op},
            )

    def _unary(self) -> AstNode:
        tok = self.cur()
        if tok.kind == "punct" and tok.text in ("+", "-", "!", "~", "++", "--"):
            op = self.advance().text
            operand = self._unary()
            return AstNode(
                "UnaryExpr",
                children=[operand],
                span=(tok.line, operand.span[1]),
                meta={"op": op, "postfix": False},
            )
        return self._postfix()

    def _postfix(self) -> AstNode:
        node = self._primary()
        while True:
            if self.at("."):
                if self.peek().kind != "ident":
                    raise self.error("expected member name after '.'")
                self.advance()
                name_idx = self.pos
                name_tok = self.advance()
                name_leaf = self._leaf("NameExpr", name_tok, name_idx)
                if self.at("("):
                    args = self._arguments()
                    node = AstNode(
                        "MethodCallExpr",
                        children=[node, name_leaf, *args],
                        span=(node.span[0], self.tokens[self.pos - 1].line),
                        meta={"has_scope": True},
                    )
                else:
                    node = AstNode(
                        "FieldAccessExpr",
                        children=[node, name_leaf],
                        span=(node.span[0], name_tok.line),
                    )
                continue
            if self.at("++") or self.at("--"):
                op = self.advance().text
                node = AstNode(
                    "UnaryExpr",
                    children=[node],
                    span=(node.span[0], self.tokens[self.pos - 1].line),
                    meta={"op": op, "postfix": True},
                )
                continue
            if self.at("["):
                raise self.error("array access expressions are not supported")
            if self.at("->"):
                raise self.error("lambda expressions are not supported")
            return node

    def _arguments(self) -> list[AstNode]:
        self.expect("(")
        args: list[AstNode] = []
        if not self.at(")"):
            while True:
                args.append(self._expression())
                if not self.accept(","):
                    break
        self.expect(")")
        return args

    def _primary(self) -> AstNode:
        tok = self.cur()
        if tok.kind == "punct" and tok.text == "(":
            if self.peek().text == ")":
                raise self.error("lambda expressions are not supported")
            self.advance()
            expr = self._expression()
            self.expect(")")
            return expr
        if tok.kind in _LITERAL_KINDS:
            idx = self.pos
            self.advance()
            return self._leaf(_LITERAL_KINDS[tok.kind], tok, idx)
        if tok.kind == "keyword":
            idx = self.pos
            if tok.text in ("true", "false"):
                self.advance()
                return self._leaf("BooleanLiteralExpr", tok, idx)
            if tok.text == "null":
                self.advance()
                return self._leaf("NullLiteralExpr", tok, idx)
            if tok.text == "this":
                self.advance()
                return self._leaf("ThisExpr", tok, idx)
            if tok.text == "new":
                raise self.error("object creation expressions are not supported")
            raise self.error(f"unexpected keyword '{tok.text}' in expression")
        if tok.kind == "ident":
            idx = self.pos
            self.advance()
            name_leaf = self._leaf("NameExpr", tok, idx)
            if self.at("->"):
                raise self.error("lambda expressions are not supported")
            if self.at("("):
                args = self._arguments()
                return AstNode(
                    "MethodCallExpr",
                    children=[name_leaf, *args],
                    span=(tok.line, self.tokens[self.pos - 1].line),
                    meta={"has_scope": False},
                )
            return name_leaf
        raise self.error(f"unexpected token {self._describe()} in expression")
