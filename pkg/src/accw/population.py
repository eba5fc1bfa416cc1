"""Parameter populations: file ingestion, synthetic sampling, filtering.

The CSV schema is one set per row under the header
``id,ks,kv,ka,tau,l,TL``.  The synthetic sampler draws each parameter
from an independent truncated normal centered on the reference values;
it stands in for an empirically calibrated joint distribution and its
provenance is recorded so results are never mistaken for calibrated
ones.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .stability import stability_scan
from .system import ParamSet, TABLE_PARAMS

CSV_HEADER = ["id", "ks", "kv", "ka", "tau", "l", "TL"]
PARAM_ORDER = ("ks", "kv", "ka", "tau", "l", "TL")


@dataclass(frozen=True)
class Population:
    ids: tuple
    sets: tuple
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.ids) != len(self.sets):
            raise ValidationError("ids and sets must align")
        if len(set(self.ids)) != len(self.ids):
            raise ValidationError("identifiers must be unique")

    def __len__(self):
        return len(self.sets)

    def __getitem__(self, i):
        return self.sets[i]

    def items(self):
        return list(zip(self.ids, self.sets))

    def subset(self, indices, provenance_note=None):
        prov = dict(self.provenance)
        if provenance_note:
            prov["filtered"] = provenance_note
        return Population(ids=tuple(self.ids[i] for i in indices),
                          sets=tuple(self.sets[i] for i in indices),
                          provenance=prov)


def save(pop: Population, path):
    """Write the population CSV; floats round-trip exactly via repr."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for ident, p in pop.items():
        w.writerow([ident] + [repr(float(getattr(p, n))) for n in PARAM_ORDER])
    from .manifest import atomic_write_text

    atomic_write_text(path, buf.getvalue())


def load(path) -> Population:
    """Read and validate a population CSV."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise ValidationError(f"cannot read population file {path}: {exc}") from exc
    if not rows:
        raise ValidationError(f"{path}: empty file")
    if rows[0] != CSV_HEADER:
        raise ValidationError(
            f"{path}: header must be {','.join(CSV_HEADER)!r}, got {rows[0]}")
    if len(rows) == 1:
        raise ValidationError(f"{path}: no data rows")
    ids, sets = [], []
    for rn, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_HEADER):
            raise ValidationError(f"{path}: row {rn} has {len(row)} columns")
        try:
            vals = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise ValidationError(f"{path}: row {rn}: {exc}") from exc
        try:
            sets.append(ParamSet(**dict(zip(PARAM_ORDER, vals))))
        except ValidationError as exc:
            raise ValidationError(f"{path}: row {rn} (id={row[0]}): {exc}") from exc
        ids.append(row[0])
    return Population(ids=tuple(ids), sets=tuple(sets),
                      provenance={"kind": "file", "path": str(path)})


@dataclass(frozen=True)
class SamplerSpec:
    """Independent truncated normals, one per parameter.

    Defaults center on the reference set with spreads of 20 percent of
    each center's magnitude and truncation at three spreads, clipped to
    the positivity constraints (tau, TL > 0; l >= 0).
    """

    count: int = 50
    seed: int = 0
    rel_spread: float = 0.2
    centers: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)  # optional per-param (lo, hi)

    def resolved(self):
        out = {}
        for name in PARAM_ORDER:
            c = self.centers.get(name, getattr(TABLE_PARAMS, name))
            sd = self.rel_spread * abs(c)
            lo, hi = self.bounds.get(name, (c - 3 * sd, c + 3 * sd))
            if name in ("tau", "TL"):
                lo = max(lo, 1e-3)
            if name == "l":
                lo = max(lo, 0.0)
            if lo >= hi and sd > 0:
                raise ValidationError(
                    f"sampler bounds for {name} are infeasible: [{lo}, {hi}]")
            out[name] = (c, sd, lo, hi)
        return out


def synth_sample(spec: SamplerSpec) -> Population:
    """Draw a reproducible synthetic population (rejection sampling)."""
    if spec.count < 1:
        raise ValidationError("sampler count must be >= 1")
    rng = np.random.default_rng(spec.seed)
    resolved = spec.resolved()
    cols = {}
    for name in PARAM_ORDER:
        c, sd, lo, hi = resolved[name]
        if sd == 0.0:
            cols[name] = np.full(spec.count, c)
            continue
        v = np.empty(spec.count)
        i = 0
        while i < spec.count:
            x = rng.normal(c, sd)
            if lo <= x <= hi:
                v[i] = x
                i += 1
        cols[name] = v
    sets = tuple(
        ParamSet(**{n: float(cols[n][i]) for n in PARAM_ORDER})
        for i in range(spec.count))
    return Population(
        ids=tuple(range(spec.count)),
        sets=sets,
        provenance={"kind": "synthetic", "seed": spec.seed,
                    "count": spec.count, "rel_spread": spec.rel_spread,
                    "note": "independent truncated normals around the "
                            "reference set; not a calibrated distribution"},
    )


def filter_stable(pop: Population, theta, n=None, margin=0.0) -> Population:
    """Subset whose delay-aware verdict is stable; order preserved."""
    result = stability_scan(pop, theta, margin=margin)
    if result["failed"]:
        ident, _, msg = result["failed"][0]
        raise ValidationError(
            f"stability scan failed for set {ident}: {msg} "
            f"({len(result['failed'])} failures total)")
    stable_ids = {ident for ident, _, _ in result["stable"]}
    indices = [i for i, ident in enumerate(pop.ids) if ident in stable_ids]
    if n is not None:
        indices = indices[:n]
    return pop.subset(indices, provenance_note={"stable_at_theta": theta,
                                                "kept": len(indices)})
