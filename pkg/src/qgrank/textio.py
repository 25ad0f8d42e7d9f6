"""Line splitting for the package's text formats.

``str.splitlines`` also breaks on characters such as U+0085 and U+2028,
which may legitimately occur inside JSON strings or literal values; every
file format here is newline-delimited only.
"""


def lines(text: str) -> list[str]:
    out = [line[:-1] if line.endswith("\r") else line for line in text.split("\n")]
    if out and out[-1] == "":
        out.pop()
    return out
