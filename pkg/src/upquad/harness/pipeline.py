"""Pipeline strings such as ``sftt(fotzo(ombq(so_oga,bqm0)))`` and their agent factories."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from ..base_algorithms import ImprovedAder, ProjectedOGA, SOOGA
from ..feedback import FOTZO, FOTZO2P, SFTT, STB
from ..geometry import ConvexBody
from ..quadratize import OMBQ, QuadratizationScheme, scheme_for

__all__ = ["PipelineParseError", "PipelineNode", "parse_pipeline", "PipelineFactory"]

BASES = ("so_oga", "ia", "oga")
QUERY_ALGOS = ("trivial", "bqm0", "bqn")
WRAPPERS = ("ombq", "fotzo", "stb", "fotzo_2p", "sftt")
_SETTING_OF = {"trivial": "mono_general", "bqm0": "mono_zero", "bqn": "nonmono"}
_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*|[(),])")


class PipelineParseError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineNode:
    name: str
    args: Tuple["PipelineNode", ...] = ()

    def __str__(self):
        if not self.args:
            return self.name
        return f"{self.name}({','.join(str(a) for a in self.args)})"

    def walk(self):
        yield self
        for a in self.args:
            yield from a.walk()


def _tokenize(text: str):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PipelineParseError(f"unexpected character at {pos} in {text!r}")
        out.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def parse_pipeline(text: str) -> PipelineNode:
    """Parse and type-check a pipeline string."""
    tokens = _tokenize(text)
    if not tokens:
        raise PipelineParseError("empty pipeline")
    node, i = _parse(tokens, 0)
    if i != len(tokens):
        raise PipelineParseError(f"trailing input after {node}: {tokens[i:]}")
    _check(node)
    return node


def _parse(tokens, i):
    if i >= len(tokens) or tokens[i] in "(),":
        raise PipelineParseError("expected a name")
    name = tokens[i]
    i += 1
    if i < len(tokens) and tokens[i] == "(":
        args = []
        i += 1
        while True:
            arg, i = _parse(tokens, i)
            args.append(arg)
            if i >= len(tokens):
                raise PipelineParseError(f"unclosed parenthesis after {name}")
            if tokens[i] == ",":
                i += 1
                continue
            if tokens[i] == ")":
                i += 1
                break
            raise PipelineParseError(f"unexpected token {tokens[i]!r}")
        return PipelineNode(name, tuple(args)), i
    return PipelineNode(name), i


def _check(node: PipelineNode) -> str:
    """Validate arity and feedback chaining; return the node's feedback class."""
    if node.name in BASES:
        if node.args:
            raise PipelineParseError(f"{node.name} takes no arguments")
        return "semi_bandit"
    if node.name in QUERY_ALGOS:
        raise PipelineParseError(f"{node.name} is only valid as the second argument of ombq")
    if node.name not in WRAPPERS:
        raise PipelineParseError(f"unknown component {node.name!r}")
    if node.name == "ombq":
        if len(node.args) != 2 or node.args[1].name not in QUERY_ALGOS or node.args[1].args:
            raise PipelineParseError("ombq takes (agent, trivial|bqm0|bqn)")
        if _check(node.args[0]) != "semi_bandit":
            raise PipelineParseError("ombq needs a semi-bandit agent inside")
        return "semi_bandit" if node.args[1].name == "trivial" else "full_info_first"
    if len(node.args) != 1:
        raise PipelineParseError(f"{node.name} takes exactly one agent")
    inner = _check(node.args[0])
    first_order = inner in ("semi_bandit", "full_info_first")
    if node.name in ("fotzo", "fotzo_2p"):
        if not first_order:
            raise PipelineParseError(f"{node.name} needs a first-order agent inside, got {inner}")
        return "full_info_zeroth"
    if node.name == "stb":
        if inner != "semi_bandit":
            raise PipelineParseError(f"stb needs a semi-bandit agent inside, got {inner}")
        return "bandit"
    # sftt
    return "semi_bandit" if first_order else "bandit"


class PipelineFactory:
    """Builds fresh agents for a parsed pipeline.

    ``scheme_params`` (gamma, curvature, mu, monotone) feed the quadratization
    scheme; the scheme is built against ``body`` so ratios use its anchor.
    """

    def __init__(self, text: Union[str, PipelineNode], body: ConvexBody, *, gamma: float = 1.0,
                 curvature: float = 0.0, mu: float = 0.0, monotone: Optional[bool] = None):
        self.node = parse_pipeline(text) if isinstance(text, str) else text
        self.body = body
        self.params = dict(gamma=gamma, curvature=curvature, mu=mu, monotone=monotone)
        self.scheme = None
        for n in self.node.walk():
            if n.name == "ombq":
                self.scheme = self._scheme(n.args[1].name)
                break

    def _scheme(self, query_algo: str) -> QuadratizationScheme:
        return scheme_for(_SETTING_OF[query_algo], body=self.body, **self.params)

    @property
    def alpha(self) -> float:
        return 1.0 if self.scheme is None else self.scheme.alpha

    @property
    def setting(self) -> str:
        return "linear" if self.scheme is None else self.scheme.setting

    @property
    def uses(self):
        return {n.name for n in self.node.walk()}

    def build(self, node: Optional[PipelineNode] = None):
        node = self.node if node is None else node
        if node.name == "so_oga":
            return SOOGA()
        if node.name == "ia":
            return ImprovedAder()
        if node.name == "oga":
            return ProjectedOGA()
        inner = self.build(node.args[0])
        if node.name == "ombq":
            return OMBQ(inner, self._scheme(node.args[1].name))
        if node.name == "fotzo":
            return FOTZO(inner)
        if node.name == "stb":
            return STB(inner)
        if node.name == "fotzo_2p":
            return FOTZO2P(inner)
        if node.name == "sftt":
            return SFTT(inner)
        raise PipelineParseError(f"unknown component {node.name!r}")

    def __str__(self):
        return str(self.node)
