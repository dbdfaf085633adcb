"""Scope resolution: attribute every identifier leaf to its declaration.

Scope rules of the subset: fields live at class scope, parameters at
method scope, locals from their declaration point to the end of the
enclosing block (for-init declarations cover the whole loop). ``this.x``
always refers to a field; a use of an undeclared field yields an implicit
binding typed with the unk sentinel. Bare names that resolve to nothing
(callee names, class references) stay unbound.
"""

from __future__ import annotations

from .ast import UNK_TYPE, AstNode, ClassDecl, SourceUnit, VariableBinding


def resolve_bindings(unit: SourceUnit) -> list[VariableBinding]:
    """(Re)compute all variable bindings for a parsed unit.

    Populates unit.bindings, unit.unbound and each MethodDecl's params,
    and returns the binding list in file declaration order.
    """
    resolver = _Resolver()
    for cls in unit.classes:
        resolver.resolve_class(cls)
    unit.bindings = resolver.bindings
    unit.unbound = resolver.unbound
    return resolver.bindings


class _Resolver:
    def __init__(self) -> None:
        self.bindings: list[VariableBinding] = []
        self.unbound: list[AstNode] = []
        self.fields: dict[str, VariableBinding] = {}
        self.scopes: list[dict[str, VariableBinding]] = []

    def _new_binding(self, name: str, scope: str, declared_type: str) -> VariableBinding:
        binding = VariableBinding(
            name=name,
            scope=scope,
            declared_type=declared_type or UNK_TYPE,
            decl_index=len(self.bindings),
        )
        self.bindings.append(binding)
        return binding

    def _lookup(self, name: str) -> VariableBinding | None:
        for env in reversed(self.scopes):
            if name in env:
                return env[name]
        return self.fields.get(name)

    def resolve_class(self, cls: ClassDecl) -> None:
        self.fields = {}
        # Fields first: they are visible throughout the class body.
        for member in cls.node.children:
            if member.kind != "FieldDeclaration":
                continue
            type_text = member.children[0].token or UNK_TYPE
            for declarator in member.children[1:]:
                name_leaf = declarator.children[0]
                binding = self._new_binding(name_leaf.token or "", "field", type_text)
                binding.occurrences.append(name_leaf)
                self.fields[binding.name] = binding
        # Field initializers may reference other fields.
        for member in cls.node.children:
            if member.kind != "FieldDeclaration":
                continue
            for declarator in member.children[1:]:
                if len(declarator.children) > 1:
                    self.visit(declarator.children[1])
        for method, node in zip(
            cls.methods,
            [m for m in cls.node.children if m.kind == "MethodDeclaration"],
        ):
            self.resolve_method(method, node)

    def resolve_method(self, method, node: AstNode) -> None:
        params: dict[str, VariableBinding] = {}
        method.params = []
        for param_node in node.children[1:-1]:
            type_leaf, name_leaf = param_node.children
            binding = self._new_binding(name_leaf.token or "", "param", type_leaf.token or "")
            binding.occurrences.append(name_leaf)
            params[binding.name] = binding
            method.params.append(binding)
        self.scopes = [params]
        self.visit(method.body)
        self.scopes = []

    # -- walker ----------------------------------------------------------

    def visit(self, node: AstNode) -> None:
        kind = node.kind
        if kind == "NameExpr":
            binding = self._lookup(node.token or "")
            if binding is not None:
                binding.occurrences.append(node)
            else:
                self.unbound.append(node)
            return
        if kind == "BlockStmt":
            self.scopes.append({})
            for child in node.children:
                self.visit(child)
            self.scopes.pop()
            return
        if kind == "ForStmt":
            self.scopes.append({})
            for child in node.children:
                self.visit(child)
            self.scopes.pop()
            return
        if kind == "VariableDeclarationExpr":
            type_text = node.children[0].token or UNK_TYPE
            for declarator in node.children[1:]:
                name_leaf = declarator.children[0]
                if len(declarator.children) > 1:
                    self.visit(declarator.children[1])  # init sees the outer name
                binding = self._new_binding(name_leaf.token or "", "local", type_text)
                binding.occurrences.append(name_leaf)
                self.scopes[-1][binding.name] = binding
            return
        if kind == "MethodCallExpr":
            children = node.children
            if (node.meta or {}).get("has_scope"):
                self.visit(children[0])
                self.unbound.append(children[1])  # callee name, never a variable
                rest = children[2:]
            else:
                self.unbound.append(children[0])
                rest = children[1:]
            for arg in rest:
                self.visit(arg)
            return
        if kind == "FieldAccessExpr":
            scope, name_leaf = node.children
            self.visit(scope)
            if scope.kind == "ThisExpr":
                name = name_leaf.token or ""
                binding = self.fields.get(name)
                if binding is None:
                    binding = self._new_binding(name, "field", UNK_TYPE)
                    self.fields[name] = binding
                binding.occurrences.append(name_leaf)
            else:
                self.unbound.append(name_leaf)
            return
        for child in node.children:
            self.visit(child)
