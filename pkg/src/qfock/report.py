"""Residual reports shared by the verification routines."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Report:
    """A named residual compared against a bound.

    ``passed`` is ``residual <= bound`` unless given explicitly (used for
    checks whose outcome is structural, e.g. a rank match).
    """

    name: str
    residual: float
    bound: float
    passed: bool | None = None
    details: dict = field(default_factory=dict)
    children: list["Report"] = field(default_factory=list)

    def __post_init__(self):
        self.residual = float(self.residual)
        self.bound = float(self.bound)
        if self.passed is None:
            self.passed = bool(self.residual <= self.bound)
        if self.children:
            self.passed = bool(self.passed and all(c.passed for c in self.children))

    @classmethod
    def combine(cls, name: str, children: list["Report"], **details) -> "Report":
        """Aggregate children; residual and bound are maxima over the children
        whose outcome is the plain comparison (structural checks are skipped)."""
        plain = [c for c in children if c.passed == (c.residual <= c.bound)]
        worst = max((c.residual - c.bound for c in plain), default=0.0)
        res = max((c.residual for c in plain), default=0.0)
        bound = max((c.bound for c in plain), default=0.0)
        rep = cls(name, res, bound, passed=True, details=details, children=list(children))
        rep.details.setdefault("worst_margin", worst)
        return rep

    def to_dict(self, style: str = "check") -> dict:
        if style == "stage":
            d = {"stage": self.name, "residual": self.residual, "bound": self.bound, "pass": self.passed}
        else:
            d = {"check": self.name, "max_residual": self.residual, "bound": self.bound, "pass": self.passed}
        if self.details:
            d["details"] = _plain(self.details)
        if self.children:
            d["children"] = [c.to_dict(style) for c in sorted(self.children, key=lambda c: c.name)]
        return d

    def flatten(self):
        yield self
        for c in self.children:
            yield from c.flatten()

    def __str__(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: residual={self.residual:.3e} bound={self.bound:.3e}"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "item"):
        return _plain(obj.item())
    return obj
