"""Plain key=value configuration files.

One `key = value` pair per line, `#` starts a comment, blank lines ignored.
Values are parsed as floats (the only thing the model files need).
"""

import math


class ConfigError(ValueError):
    """Malformed configuration file."""


def parse_config_text(text, source="<config>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        try:
            num = float(val.strip())
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad number for {key!r}: {val.strip()!r}") from exc
        if not math.isfinite(num):
            raise ConfigError(f"{source}:{lineno}: non-finite value for {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = num
    return values


def read_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


def write_config(path, values, header=None):
    lines = []
    if header:
        lines.append(f"# {header}")
    for key, val in values.items():
        lines.append(f"{key} = {float(val):.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
