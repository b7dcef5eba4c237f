"""File formats: CSV curves and samples, JSON configs and manifests.

All numeric output is serialized with 17 significant digits and LF
newlines regardless of platform or locale, so identical inputs produce
byte-identical files.  Every data file written by the command-line
tool is accompanied by a ``<name>.manifest.json`` sidecar recording
the command, the fully resolved configuration, the seed and the
library version; the manifest carries the only timestamp, keeping the
data file itself reproducible.

Error discipline: a file that cannot be read or does not parse raises
:class:`~prodfade.errors.IngestionError` (missing fields included);
values that parse but violate a domain constraint raise ``ValueError``
from the owning type.
"""

import csv
import json
from datetime import datetime, timezone

import numpy as np

from .errors import IngestionError
from .fit import EmpiricalDistribution, empirical_from_samples
from .gammagamma import GammaGammaParams
from .mixture import ShadowedParams
from .pdist import ProductModel
from .sysmodels import BackscatterConfig, WpcConfig

__all__ = [
    "format_float",
    "parse_grid",
    "write_csv",
    "write_json",
    "write_manifest",
    "read_empirical_csv",
    "read_params_json",
    "read_wpc_json",
    "read_backscatter_json",
]


def format_float(value):
    """17-significant-digit decimal form; round-trips any double."""
    return format(float(value), ".17g")


def parse_grid(text):
    """Evaluation grid from ``start:stop:points`` or ``start:stop:points:log``.

    Linear grids are inclusive of both endpoints; log grids are
    geometric between two positive endpoints.
    """
    parts = str(text).split(":")
    if len(parts) not in (3, 4):
        raise ValueError("grid must be start:stop:points[:log], got %r" % (text,))
    try:
        start, stop = float(parts[0]), float(parts[1])
        points = int(parts[2])
    except ValueError:
        raise ValueError("grid fields must be numeric, got %r" % (text,)) from None
    if points < 1:
        raise ValueError("grid needs at least one point")
    if len(parts) == 4:
        if parts[3] != "log":
            raise ValueError("grid scale must be 'log', got %r" % (parts[3],))
        if start <= 0 or stop <= 0:
            raise ValueError("log grid endpoints must be positive")
        return np.geomspace(start, stop, points)
    return np.linspace(start, stop, points)


def write_csv(path, header, columns):
    """Write named columns with deterministic formatting.

    ``header`` is a list of column names, ``columns`` the matching list
    of equal-length arrays.
    """
    columns = [np.atleast_1d(np.asarray(c, dtype=float)) for c in columns]
    if len(header) != len(columns):
        raise ValueError("header and columns disagree in length")
    n = columns[0].size
    if any(c.size != n for c in columns):
        raise ValueError("columns must have equal length")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(format_float(c[i]) for c in columns) + "\n")


def write_json(path, payload):
    """Deterministically ordered JSON with trailing newline."""
    with open(path, "w", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(data_path, command, config, seed=None):
    """Sidecar manifest for a data file; returns the manifest path."""
    manifest_path = str(data_path) + ".manifest.json"
    from . import __version__
    write_json(manifest_path, {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "output": str(data_path),
    })
    return manifest_path


def _read_rows(path):
    try:
        with open(path, newline="") as fh:
            return list(csv.reader(fh))
    except OSError as exc:
        raise IngestionError("cannot read %s: %s" % (path, exc)) from exc


def _parse_float(path, line_no, field, text):
    try:
        return float(text)
    except ValueError:
        raise IngestionError(
            "%s line %d: field %r is not a number: %r" % (path, line_no, field, text)
        ) from None


def read_empirical_csv(path):
    """Empirical data from CSV.

    Accepted layouts (chosen by the header row):

    * ``sample`` -- one positive draw per line, converted to a step CDF;
    * ``x,cdf`` -- distribution-function points;
    * ``x,pdf`` -- density points.
    """
    rows = [r for r in _read_rows(path) if r and any(f.strip() for f in r)]
    if not rows:
        raise IngestionError("%s: empty file" % (path,))
    header = [h.strip().lower() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise IngestionError("%s: no data rows" % (path,))

    if header == ["sample"]:
        samples = [
            _parse_float(path, i + 2, "sample", row[0])
            for i, row in enumerate(body)
        ]
        return empirical_from_samples(np.asarray(samples))

    if header in (["x", "cdf"], ["x", "pdf"]):
        kind = header[1]
        xs, vals = [], []
        for i, row in enumerate(body):
            if len(row) != 2:
                raise IngestionError(
                    "%s line %d: expected 2 fields, got %d" % (path, i + 2, len(row))
                )
            xs.append(_parse_float(path, i + 2, "x", row[0]))
            vals.append(_parse_float(path, i + 2, kind, row[1]))
        return EmpiricalDistribution(kind, np.asarray(xs), np.asarray(vals))

    raise IngestionError(
        "%s: unrecognized header %r; expected 'sample', 'x,cdf' or 'x,pdf'"
        % (path, ",".join(header))
    )


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise IngestionError("cannot read %s: %s" % (path, exc)) from exc
    except json.JSONDecodeError as exc:
        raise IngestionError("%s: malformed JSON: %s" % (path, exc)) from exc


def _require(obj, key, path):
    if not isinstance(obj, dict):
        raise IngestionError("%s: expected a JSON object, got %r" % (path, type(obj).__name__))
    if key not in obj:
        raise IngestionError("%s: missing field %r" % (path, key))
    return obj[key]


def _shadowed_from(obj, path, context):
    if not isinstance(obj, dict):
        raise IngestionError("%s: %s must be an object" % (path, context))
    missing = [k for k in ("kappa", "mu", "m") if k not in obj]
    if missing:
        raise IngestionError("%s: %s missing field(s) %s" % (path, context, missing))
    return ShadowedParams(
        obj.get("mean_power", 1.0), obj["kappa"], obj["mu"], obj["m"]
    )


def read_params_json(path, dist):
    """Distribution parameters for the ``eval``/``sample`` commands.

    ``dist`` selects the schema: ``kms`` (single channel), ``gg``
    (Gamma product kernel) or ``prod`` (two-link product model).
    """
    obj = _load_json(path)
    if dist == "kms":
        return _shadowed_from(obj, path, "parameters")
    if dist == "gg":
        for k in ("m", "m_hat", "omega", "omega_hat"):
            _require(obj, k, path)
        return GammaGammaParams(obj["m"], obj["m_hat"], obj["omega"], obj["omega_hat"])
    if dist == "prod":
        return ProductModel(
            _shadowed_from(_require(obj, "link_a", path), path, "link_a"),
            _shadowed_from(_require(obj, "link_b", path), path, "link_b"),
        )
    raise ValueError("dist must be 'kms', 'gg' or 'prod', got %r" % (dist,))


def read_wpc_json(path):
    """WpcConfig from JSON; see the sysmodels documentation for fields."""
    obj = _load_json(path)
    kwargs = {
        "tx_power_over_noise": _require(obj, "tx_power_over_noise", path),
        "pb_antennas": _require(obj, "pb_antennas", path),
        "rician_k": _require(obj, "rician_k", path),
    }
    sd = obj.get("s_d_model", "rayleigh")
    if isinstance(sd, dict):
        kind = _require(sd, "kind", path)
        if kind == "rician":
            kwargs["s_d_model"] = "rician"
            kwargs["s_d_rician_k"] = _require(sd, "k_factor", path)
        elif kind == "shadowed":
            kwargs["s_d_model"] = _shadowed_from(sd, path, "s_d_model")
        else:
            raise IngestionError("%s: unknown s_d_model kind %r" % (path, kind))
    else:
        kwargs["s_d_model"] = sd
    for key in ("harvest_fraction", "efficiency", "path_loss_exponent",
                "d1", "d2", "rate", "m_proxy"):
        if key in obj:
            kwargs[key] = obj[key]
    return WpcConfig(**kwargs)


def read_backscatter_json(path):
    """BackscatterConfig from JSON: mean_rx_power plus two links."""
    obj = _load_json(path)
    return BackscatterConfig(
        mean_rx_power=_require(obj, "mean_rx_power", path),
        forward=_shadowed_from(_require(obj, "forward", path), path, "forward"),
        reverse=_shadowed_from(_require(obj, "reverse", path), path, "reverse"),
    )
