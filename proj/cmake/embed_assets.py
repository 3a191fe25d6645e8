#!/usr/bin/env python3
"""Generate a C++ source file embedding text assets as string constants.

Usage: embed_assets.py <output.cpp> <root_dir> <file1> [file2 ...]

Each asset is keyed by its path relative to <root_dir> with '/' separators.
The generated file defines agentjudge::embedded_asset_names() and
agentjudge::find_embedded_asset(name).
"""

import os
import sys


def escape_line(line: str) -> str:
    out = []
    for ch in line:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append("\\x%02x" % ord(ch))
        else:
            out.append(ch)
    return "".join(out)


def main() -> int:
    if len(sys.argv) < 4:
        sys.stderr.write(__doc__)
        return 2
    out_path, root = sys.argv[1], sys.argv[2].rstrip("/")
    files = sorted(sys.argv[3:])

    chunks = []
    chunks.append("// Generated by cmake/embed_assets.py; do not edit.\n")
    chunks.append("#include <map>\n#include <string>\n#include <vector>\n\n")
    chunks.append("namespace agentjudge {\nnamespace {\n")
    chunks.append("const std::map<std::string, std::string> kEmbeddedAssets = {\n")
    for path in files:
        rel = path[len(root) + 1 :] if path.startswith(root + "/") else path
        with open(path, "r", encoding="utf-8") as fh:
            content = fh.read()
        chunks.append('    {"%s",\n' % escape_line(rel))
        for line in content.splitlines(keepends=True):
            body = line[:-1] if line.endswith("\n") else line
            suffix = "\\n" if line.endswith("\n") else ""
            chunks.append('     "%s%s"\n' % (escape_line(body), suffix))
        chunks.append("    },\n")
    chunks.append("};\n}  // namespace\n\n")
    chunks.append(
        "const std::string* find_embedded_asset(const std::string& name) {\n"
        "  auto it = kEmbeddedAssets.find(name);\n"
        "  return it == kEmbeddedAssets.end() ? nullptr : &it->second;\n"
        "}\n\n"
        "std::vector<std::string> embedded_asset_names() {\n"
        "  std::vector<std::string> names;\n"
        "  for (const auto& [name, text] : kEmbeddedAssets) names.push_back(name);\n"
        "  return names;\n"
        "}\n\n"
        "}  // namespace agentjudge\n"
    )
    os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("".join(chunks))
    return 0


if __name__ == "__main__":
    sys.exit(main())
