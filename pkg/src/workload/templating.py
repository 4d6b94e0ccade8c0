"""
{var} 占位符模板

shell 风格的 ${VAR} 不视为占位符，原样保留
"""

import re
from typing import Iterable, Mapping, Set

PLACEHOLDER_RE = re.compile(r"(?<!\$)\{([A-Za-z_][A-Za-z0-9_]*)\}")


class TemplateError(KeyError):
    """模板引用了未定义的变量"""

    def __init__(self, name: str, template: str):
        super().__init__(name)
        self.name = name
        self.template = template

    def __str__(self) -> str:
        return f"unknown placeholder {{{self.name}}} in {self.template!r}"


def placeholders(template: str) -> Set[str]:
    """模板中出现的占位符名称"""
    return set(PLACEHOLDER_RE.findall(template))


def unresolved(templates: Iterable[str], known: Set[str]) -> Set[str]:
    """返回模板中不在 known 里的占位符"""
    missing: Set[str] = set()
    for template in templates:
        missing |= placeholders(template) - known
    return missing


def render(template: str, variables: Mapping[str, object]) -> str:
    """
    替换占位符

    Args:
        template: 模板字符串
        variables: 变量表

    Returns:
        替换后的字符串

    Raises:
        TemplateError: 占位符未定义
    """
    def substitute(match: re.Match) -> str:
        name = match.group(1)
        if name not in variables:
            raise TemplateError(name, template)
        return str(variables[name])

    return PLACEHOLDER_RE.sub(substitute, template)
