class ResourceError(RuntimeError):
    """A configured size or step budget was exceeded; no answer was produced."""


class UndecidableClass(ValueError):
    """The question is undecidable for this machine class (e.g. membership for nondeterministic CSACM)."""

    code = "undecidable-class"


class SignatureError(ValueError):
    """The machine's store list or mode does not fit the procedure."""


class Namer:
    """Stable, collision-free state names for product constructions."""

    def __init__(self) -> None:
        self._names: dict[object, str] = {}
        self._used: set[str] = set()

    def __call__(self, key: object, hint: str) -> str:
        name = self._names.get(key)
        if name is not None:
            return name
        base = hint.replace(" ", "").replace("|", "!") or "s"
        name, n = base, 1
        while name in self._used:
            n += 1
            name = f"{base}~{n}"
        self._names[key] = name
        self._used.add(name)
        return name
