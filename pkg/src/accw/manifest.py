"""Run manifests and atomic file output.

Every CLI command writes a JSON manifest next to its outputs recording
the fully-resolved configuration (every default materialized), the
seed, the library version, and checksums of the produced files.
Re-running the same command reproduces the outputs byte for byte.
"""

import hashlib
import json
import os
import tempfile
import time


def atomic_write_text(path, text):
    """Write via a temp file in the same directory, then rename."""
    path = str(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".accw-tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def fmt_float(x):
    """Shortest round-trip decimal form."""
    return repr(float(x))


def write_csv(path, header, rows):
    """Write rows of mixed scalars; floats via fmt_float."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, bool):
                cells.append(str(int(v)))
            elif isinstance(v, float) or hasattr(v, "dtype"):
                cells.append(fmt_float(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


class RunManifest:
    """Collects resolved config and outputs for one command invocation."""

    def __init__(self, command, config, seed=None):
        from . import __version__

        self.command = list(command)
        self.config = config
        self.seed = seed
        self.version = __version__
        self.outputs = []
        self._t0 = time.monotonic()

    def add_output(self, path):
        self.outputs.append(str(path))

    def write(self, path):
        doc = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "library_version": self.version,
            "outputs": [
                {"path": p, "sha256": sha256_file(p)} for p in self.outputs
            ],
            "duration_s": round(time.monotonic() - self._t0, 3),
        }
        atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return doc
