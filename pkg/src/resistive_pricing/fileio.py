"""File formats: network and advertiser JSON, CSV output, run manifests.

All CSV output uses LF line endings and 9 significant digits so that
identical runs produce byte-identical files.
"""

import hashlib
import json
import time
from dataclasses import dataclass

import numpy as np

from .network import AdRevenueVector, TrafficNetwork, validate_network
from .selection import AdvertiserCatalog

VERSION = "0.1.0"


class MalformedInput(ValueError):
    pass


def fmt(x) -> str:
    """Fixed 9-significant-digit rendering used in every CSV."""
    return f"{float(x):.9g}"


@dataclass(frozen=True)
class LoadedNetwork:
    network: TrafficNetwork
    ad_revenue: AdRevenueVector
    empty_pairs: tuple | None


def load_network(path) -> LoadedNetwork:
    """Read a network spec file.

    JSON with fields ``n``, ``cost``, ``arcs`` (objects with from, to,
    demand, travel_time, optional ad_revenue) and optional
    ``empty_travel_time`` entries for off-arc empty-vehicle pairs.
    Location indices are zero-based.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"cannot read network file {path}: {exc}") from exc
    try:
        n = int(doc["n"])
        cost = float(doc["cost"])
        arcs = doc["arcs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"network file {path} missing n/cost/arcs") from exc
    demand = np.zeros((n, n))
    travel = np.ones((n, n))
    ads = np.zeros((n, n))
    for entry in arcs:
        i, j = int(entry["from"]), int(entry["to"])
        demand[i, j] = float(entry["demand"])
        travel[i, j] = float(entry["travel_time"])
        ads[i, j] = float(entry.get("ad_revenue", 0.0))
    net = validate_network(demand, travel, cost)
    empty = None
    if doc.get("empty_travel_time"):
        empty = tuple((int(e["from"]), int(e["to"]), float(e["travel_time"]))
                      for e in doc["empty_travel_time"])
    return LoadedNetwork(net, AdRevenueVector(net, ads), empty)


def save_network(path, net: TrafficNetwork, ad_revenue=None, empty_pairs=None):
    ads = ad_revenue.values if isinstance(ad_revenue, AdRevenueVector) \
        else ad_revenue
    arcs = []
    for i, j in net.arcs:
        entry = {"from": i, "to": j,
                 "demand": float(net.demand[i, j]),
                 "travel_time": float(net.travel_time[i, j])}
        if ads is not None and ads[i, j] != 0:
            entry["ad_revenue"] = float(ads[i, j])
        arcs.append(entry)
    doc = {"n": net.n_locations, "cost": float(net.unit_cost), "arcs": arcs}
    if empty_pairs:
        doc["empty_travel_time"] = [
            {"from": int(i), "to": int(j), "travel_time": float(t)}
            for i, j, t in empty_pairs]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_ads(path, net: TrafficNetwork) -> AdRevenueVector:
    """Read a standalone ad-revenue file: {"ads": [{from, to, a}]}."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"cannot read ads file {path}: {exc}") from exc
    if "ads" not in doc:
        raise MalformedInput(f"ads file {path} must carry an 'ads' list")
    entries = {(int(e["from"]), int(e["to"])): float(e["a"])
               for e in doc["ads"]}
    return AdRevenueVector.from_arcs(net, entries)


def save_ads(path, net: TrafficNetwork, ad_revenue):
    ads = ad_revenue.values if isinstance(ad_revenue, AdRevenueVector) \
        else np.asarray(ad_revenue)
    doc = {"ads": [{"from": i, "to": j, "a": float(ads[i, j])}
                   for i, j in net.arcs if ads[i, j] != 0]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_advertisers(path) -> AdvertiserCatalog:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"cannot read advertiser file {path}: {exc}") from exc
    arc_based = {}
    for entry in doc.get("arc_based", []):
        arc_based[(int(entry["from"]), int(entry["to"]))] = float(entry["b"])
    location_based = {}
    for entry in doc.get("location_based", []):
        k = int(entry["location"])
        location_based[k] = {int(d["from"]): float(d["value"])
                             for d in entry.get("d", [])}
    return AdvertiserCatalog(arc_based=arc_based,
                             location_based=location_based,
                             budget=int(doc.get("budget", 1)))


def save_advertisers(path, catalog: AdvertiserCatalog):
    doc = {
        "arc_based": [
            {"from": i, "to": j, "b": float(b)}
            for (i, j), b in sorted(catalog.arc_based.items())],
        "location_based": [
            {"location": k,
             "d": [{"from": i, "value": float(v)}
                   for i, v in sorted(incoming.items())]}
            for k, incoming in sorted(catalog.location_based.items())],
        "budget": catalog.budget,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows, footer=None):
    """Write rows of already-stringified cells with LF endings."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
        for line in footer or ():
            fh.write(line + "\n")


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_path, command: str, params: dict, seed,
                   input_paths, started: float):
    """Emit the reproducibility manifest next to an output file."""
    manifest = {
        "command": command,
        "parameters": {k: params[k] for k in sorted(params)},
        "seed": seed,
        "inputs": {str(p): _sha256(p) for p in input_paths},
        "version": VERSION,
        "duration_seconds": round(time.time() - started, 6),
    }
    path = str(out_path) + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
