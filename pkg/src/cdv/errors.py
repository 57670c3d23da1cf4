"""Exception taxonomy shared by all modules."""


class CdvError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(CdvError, ValueError):
    """Dimension mismatch between operands; the message names both dims."""


class EmptyInputError(CdvError, ValueError):
    """An operation received an empty sequence it cannot act on."""


class StateError(CdvError, RuntimeError):
    """Operation called in the wrong order (e.g. backward before forward)."""


class DegenerateLabelsError(CdvError, ValueError):
    """A multi-label target with no positives or no negatives."""


class ParseError(CdvError, ValueError):
    """Malformed input file; carries location context when known."""

    def __init__(self, message, path=None, line=None, doc_id=None):
        parts = [message]
        if path is not None:
            parts.append(f"path={path}")
        if line is not None:
            parts.append(f"line={line}")
        if doc_id is not None:
            parts.append(f"doc_id={doc_id}")
        super().__init__(" | ".join(str(p) for p in parts))
        self.path = path
        self.line = line
        self.doc_id = doc_id


class IntegrityError(CdvError, ValueError):
    """Inconsistent data: duplicate ids, dangling references, bad ranges."""


class NotFoundError(CdvError, KeyError):
    """Lookup of an id that does not exist in the target collection."""


class ConfigError(CdvError, ValueError):
    """Missing or invalid run configuration (paths, checkpoints, keys)."""


class UnresolvableEntityError(CdvError, ValueError):
    """Entity with an unknown id and no usable mention text."""


def require_same_dim(name_a, dim_a, name_b, dim_b):
    if dim_a != dim_b:
        raise ShapeError(f"{name_a} has dim {dim_a} but {name_b} has dim {dim_b}")
