"""Trace-driven model of a clustered edge ecosystem.

Nodes sit on a subset of candidate locations and are grouped by K-means; the
member closest to each centroid is the cluster sink. Users follow trips and
issue a request every ``req_step`` distance units to their nearest node. A
node that cannot cover a request offloads it to a covering peer of its
cluster, falling back to the sink; the serving peer (the receptor) feeds the
active migration policy.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import baselines
from ._backend import BACKEND
from .baselines import DbscanParams, RandomDmParams, RandomDmState
from .core import RequestInterval, contains
from .ensemble import EnsembleConfig, MigrationDirective, ReceptorState, on_request
from .metrics import MigrationEvent, RequestEvent, RunRecord, build_record
from .workload import Workload, WorkloadError

log = logging.getLogger(__name__)

POLICIES = ("model", "random-dm", "dbscan-dm")


@dataclass
class NodeState:
    id: int
    location: np.ndarray
    cluster_id: int
    is_sink: bool
    available: RequestInterval
    request_log: list = field(default_factory=list)
    receptor: Optional[ReceptorState] = None


@dataclass(frozen=True)
class SimConfig:
    n_nodes: int = 20
    n_clusters: int = 3
    trips: int = 1000
    req_step: float = 1.0
    seed: int = 0
    policy: str = "model"
    ensemble: EnsembleConfig = EnsembleConfig()
    dbscan: DbscanParams = DbscanParams()
    random_dm: RandomDmParams = RandomDmParams()
    qnm: int = 2                      # DBSCAN-DM fan-out
    migration_mode: str = "replace"   # or "union"
    init_width: tuple = (0.1, 0.4)

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.migration_mode not in ("replace", "union"):
            raise ValueError(f"unknown migration mode {self.migration_mode!r}")
        if self.n_clusters < 1 or self.n_clusters > self.n_nodes:
            raise ValueError("need 1 <= n_clusters <= n_nodes")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        d = dict(d)
        if isinstance(d.get("ensemble"), dict):
            d["ensemble"] = EnsembleConfig(**d["ensemble"])
        if isinstance(d.get("dbscan"), dict):
            d["dbscan"] = DbscanParams(**d["dbscan"])
        if isinstance(d.get("random_dm"), dict):
            d["random_dm"] = RandomDmParams(**d["random_dm"])
        if "init_width" in d:
            d["init_width"] = tuple(d["init_width"])
        return cls(**d)


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    sinks: list
    n_iter: int
    inertia: list

    @property
    def k(self) -> int:
        return len(self.centroids)


def _assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=-1)
    return np.argmin(d2, axis=1), d2


def kmeans(locations, k: int, seed: int = 0, max_iter: int = 100) -> KMeansResult:
    """Lloyd's algorithm from a seeded farthest-point start."""
    pts = np.asarray(locations, dtype=float).reshape(-1, 2)
    n = len(pts)
    if not 1 <= k <= len(np.unique(pts, axis=0)):
        raise ValueError("k must be between 1 and the number of distinct locations")
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    nearest = ((pts - pts[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, ((pts - pts[nxt]) ** 2).sum(axis=1))
    centroids = pts[chosen].copy()

    labels = None
    inertia = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new_labels, d2 = _assign(pts, centroids)
        counts = np.bincount(new_labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            # reseed at the point worst served by its current centroid
            far = int(np.argmax(d2[np.arange(n), new_labels]))
            centroids[empty] = pts[far]
            new_labels, d2 = _assign(pts, centroids)
        inertia.append(float(d2[np.arange(n), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        centroids = np.array([pts[labels == c].mean(axis=0) if np.any(labels == c)
                              else centroids[c] for c in range(k)])
    sinks = []
    for c in range(k):
        members = np.flatnonzero(labels == c)
        dist = ((pts[members] - centroids[c]) ** 2).sum(axis=1)
        sinks.append(int(members[np.argmin(dist)]))
    return KMeansResult(labels, centroids, sinks, n_iter, inertia)


class Network:
    def __init__(self, nodes: list[NodeState]):
        self.nodes = nodes
        self.coords = np.array([nd.location for nd in nodes], dtype=float)
        self.members: dict = {}
        for nd in nodes:
            self.members.setdefault(nd.cluster_id, []).append(nd.id)
        self.sink_of = {nd.cluster_id: nd.id for nd in nodes if nd.is_sink}

    def __getitem__(self, node_id: int) -> NodeState:
        return self.nodes[node_id]

    def nearest(self, origin) -> int:
        d2 = ((self.coords - np.asarray(origin, dtype=float)) ** 2).sum(axis=1)
        return int(np.argmin(d2))

    @property
    def non_sinks(self) -> list[int]:
        return [nd.id for nd in self.nodes if not nd.is_sink]


def build_network(workload: Workload, cfg: SimConfig) -> Network:
    rng = np.random.default_rng(cfg.seed)
    locs = workload.locations
    if len(locs) < cfg.n_nodes:
        raise WorkloadError(f"{len(locs)} locations cannot host {cfg.n_nodes} nodes")
    picked = np.sort(rng.choice(len(locs), size=cfg.n_nodes, replace=False))
    coords = locs.coords[picked]
    km = kmeans(coords, cfg.n_clusters, seed=cfg.seed)
    lo_w, hi_w = cfg.init_width
    nodes = []
    for i in range(cfg.n_nodes):
        sink = i in km.sinks
        if sink:
            avail = RequestInterval(0.0, 1.0)
        else:
            width = rng.uniform(lo_w, hi_w)
            low = rng.uniform(0.0, 1.0 - width)
            avail = RequestInterval(float(low), float(min(low + width, 1.0)))
        nodes.append(NodeState(i, coords[i], int(km.labels[i]), sink, avail))
    return Network(nodes)


def route_request(net: Network, origin, interval: RequestInterval) -> tuple[int, int, bool]:
    """Return ``(server, requestor, local)``."""
    requestor = net.nearest(origin)
    here = net[requestor]
    if contains(here.available, interval):
        return requestor, requestor, True
    peers = [p for p in net.members[here.cluster_id] if p != requestor]
    covering = [p for p in peers if contains(net[p].available, interval)]
    if covering:
        d2 = ((net.coords[covering] - here.location) ** 2).sum(axis=1)
        return covering[int(np.argmin(d2))], requestor, False
    return net.sink_of[here.cluster_id], requestor, False


def apply_migration(net: Network, directive: MigrationDirective, t: int, policy: str,
                    mode: str = "replace") -> MigrationEvent:
    target = net[directive.target]
    iv = directive.interval
    if mode == "union":
        iv = RequestInterval(min(iv.low, target.available.low),
                             max(iv.high, target.available.high))
    target.available = iv
    return MigrationEvent(t, directive.source, directive.target,
                          directive.interval.low, directive.interval.high, policy)


def _receptor(node: NodeState, cfg: SimConfig) -> ReceptorState:
    if node.receptor is None:
        node.receptor = ReceptorState(node.id, cfg.ensemble.window, cfg.ensemble.lr,
                                      cfg.ensemble.pooled)
    return node.receptor


def run_trace(cfg: SimConfig, workload: Workload) -> RunRecord:
    if cfg.trips > len(workload.trips):
        raise WorkloadError(f"workload has {len(workload.trips)} trips, {cfg.trips} requested")
    net = build_network(workload, cfg)
    random_state = RandomDmState(cfg.random_dm) if cfg.policy == "random-dm" else None
    peers = net.non_sinks
    intervals = iter(workload.intervals)

    requests: list[RequestEvent] = []
    migrations: list[MigrationEvent] = []
    initiating = 0
    trip_starts = []
    t = 0
    for trip in workload.trips.trips[:cfg.trips]:
        intervals.new_trip()
        trip_starts.append(t)
        for pos in trip.request_positions(cfg.req_step):
            try:
                iv = next(intervals)
            except StopIteration:
                raise WorkloadError("interval stream is empty") from None
            server, requestor, local = route_request(net, pos, iv)
            req_node, srv_node = net[requestor], net[server]
            serviceable = local or contains(srv_node.available, iv)
            requests.append(RequestEvent(t, requestor, server, iv.low, iv.high,
                                         req_node.available.low, req_node.available.high,
                                         local, serviceable))
            req_node.request_log.append(t)

            directives: list[MigrationDirective] = []
            if cfg.policy == "random-dm":
                directives = baselines.random_dm_step(random_state, server, peers)
            elif not local and serviceable:
                state = _receptor(srv_node, cfg)
                if cfg.policy == "model":
                    directives = on_request(state, requestor, iv, cfg.ensemble, t)
                else:
                    directives = baselines.dbscan_dm_step(state, requestor, iv, cfg.dbscan,
                                                          cfg.qnm, cfg.ensemble, t)
            directives = [d for d in directives if not net[d.target].is_sink]
            if directives:
                initiating += 1
                for d in directives:
                    migrations.append(apply_migration(net, d, t, cfg.policy,
                                                      cfg.migration_mode))
            t += 1

    meta = {"config": cfg.to_dict(), "backend": BACKEND,
            "sinks": [nd.id for nd in net.nodes if nd.is_sink],
            "workload": workload.source}
    return build_record(requests, migrations, cfg.ensemble.lr, initiating, meta, trip_starts)
