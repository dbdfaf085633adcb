"""pathvec: Java AST path-context embeddings at desk scale.

Pipeline pieces: parse Java source -> optionally obfuscate variable names
-> extract path-contexts -> train an attention model on method-name
prediction -> reuse its code vectors as embeddings -> aggregate per-file
-> evaluate with a linear classifier, Cohen's kappa and t-tests.
"""

__version__ = "0.1.0"
