"""End-to-end collection tours: cover the support, plan per cell, link cells.

solve_dstsp locates every target in a cover root, runs the tree collection
solver inside each occupied root (target addresses come from locate_path),
realizes the abstract plan as steering between cell anchors plus out-and-back
visits, and stitches the per-root tours along a nearest-neighbor-plus-2-opt
tour of the occupied anchors. Exact small-instance search and a linear
whole-support bound give the two ends every run can be checked against.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import dynamics as dyn
from . import hcp
from . import hcs
from .errors import NotSymmetric, OutOfSupport, TargetOutsideCover, TooLarge
from .seeding import make_rng


@dataclass(frozen=True)
class Tour:
    trajectory: dyn.Trajectory
    visited: tuple     # (target id, arrival time) pairs
    total_time: float


def default_eps0(n, gamma, c0=1.0, eps_min=1e-6, eps_max=1.0):
    """Root-cell radius for n targets: n^(-1/gamma), clamped at the ends."""
    if n <= 1:
        return eps_max
    return min(max(c0 * n ** (-1.0 / gamma), eps_min), eps_max)


def _closed_form_speed(model):
    """Workspace speed for models whose steering time is distance / speed."""
    if model.model_id in ("euclidean2", "euclidean3"):
        return model.c_pi
    if model.model_id == "scaled_euclidean2" and not hasattr(
            model.sigma, "values"):
        return model.c_pi * float(model.sigma)
    return None


def _steer_time(model, a, b, speed=None):
    if speed is not None:
        d = math.dist(a[:model.workspace_dim], b[:model.workspace_dim])
        return d / speed
    return dyn.steer(model, a, b).duration


def roots_tour(model, anchors):
    """(ordered anchors, realized path time): nearest neighbor then 2-opt.

    The realized time upper-bounds the optimal open tour through the anchors,
    which is all the cover-level term of the time bound needs.
    """
    m = len(anchors)
    if m == 0:
        raise ValueError("at least one anchor required")
    if m == 1:
        return [anchors[0]], 0.0
    speed = _closed_form_speed(model)
    if speed is not None:
        pts = np.asarray([a[:model.workspace_dim] for a in anchors])
        live = np.ones(m, dtype=bool)
        order = [0]
        live[0] = False
        while len(order) < m:
            d = np.linalg.norm(pts - pts[order[-1]], axis=1)
            d[~live] = np.inf
            nxt = int(np.argmin(d))
            order.append(nxt)
            live[nxt] = False

        def dist(i, j):
            return float(np.linalg.norm(pts[i] - pts[j])) / speed
    else:
        cache = {}

        def dist(i, j):
            key = (i, j) if i <= j else (j, i)
            if key not in cache:
                cache[key] = _steer_time(model, anchors[key[0]],
                                         anchors[key[1]])
            return cache[key]

        order = [0]
        remaining = set(range(1, m))
        while remaining:
            last = order[-1]
            nxt = min(remaining, key=lambda j: (dist(last, j), j))
            order.append(nxt)
            remaining.discard(nxt)

    # windowed 2-opt on the open path: try reversing short spans
    window = 10
    for _ in range(4):
        improved = False
        for i in range(m - 1):
            for j in range(i + 1, min(i + window, m - 1)):
                # reversing order[i+1 .. j] touches edges (i,i+1) and (j,j+1)
                before = dist(order[i], order[i + 1])
                after = dist(order[i], order[j])
                if j + 1 < m:
                    before += dist(order[j], order[j + 1])
                    after += dist(order[i + 1], order[j + 1])
                if after < before - 1e-15:
                    order[i + 1:j + 1] = reversed(order[i + 1:j + 1])
                    improved = True
        if not improved:
            break
    time = sum(dist(order[k], order[k + 1]) for k in range(m - 1))
    return [anchors[i] for i in order], float(time)


def _target_config(model, cell, point):
    """Configuration the vehicle occupies while visiting a workspace point."""
    if model.config_dim > model.workspace_dim:
        return (float(point[0]), float(point[1]), cell.anchor[2])
    return tuple(float(v) for v in point)


def _realize_root(model, cover, root_idx, ids_points, depth):
    """Plan and realize one root's collection tour.

    Returns (segments, visits, duration); the piece starts and ends at the
    root anchor, visit times are relative to the piece start.
    """
    root_anchor = cover.roots[root_idx].anchor
    groups = {}   # canonical path -> list of original target ids
    for tid, point in ids_points:
        _, path = hcs.locate_path(cover, point, depth)
        groups.setdefault(hcp.canonical_path(path), []).append(tid)
    paths = sorted(groups)
    params = hcp.HcpParams(branch_factor=cover.s ** cover.gamma,
                           scale=cover.s)
    plan = hcp.construct_optimal_plan(hcp.HcpInstance(params, tuple(paths)))

    tree = hcs.build_hcs(model, root_anchor, cover.eps0, depth, s=cover.s)
    by_id = dict(ids_points)
    stack = [tree]
    segments = []
    visits = []
    t = 0.0

    def push(traj):
        nonlocal t
        segments.extend(traj.segments)
        t += traj.duration

    for action in plan:
        if action[0] == "down":
            child = stack[-1].children[action[1]]
            push(dyn.steer(model, stack[-1].anchor, child.anchor))
            stack.append(child)
        elif action[0] == "up":
            parent = stack[-2]
            push(dyn.steer(model, stack[-1].anchor, parent.anchor))
            stack.pop()
        else:
            for tid in groups[paths[action[1]]]:
                cfg = _target_config(model, stack[-1], by_id[tid])
                out = dyn.steer(model, stack[-1].anchor, cfg)
                push(out)
                visits.append((tid, t))
                push(dyn.reverse_trajectory(out))
    if len(stack) != 1:
        raise RuntimeError("plan did not return to the root")
    return segments, visits, t


def solve_dstsp(model, cover, targets, threads=1, with_info=False):
    """Tour visiting every target, assembled from per-root collection plans."""
    if not model.symmetric:
        raise NotSymmetric("tour realization reverses steers")
    targets = [tuple(float(v) for v in p) for p in targets]
    if not targets:
        start = cover.roots[0].anchor
        tour = Tour(dyn.Trajectory(model, start, ()), (), 0.0)
        if with_info:
            return tour, {"c_eps0": 0.0, "roots": {}, "depths": {}}
        return tour

    by_root = {}
    for tid, p in enumerate(targets):
        try:
            ri = hcs.locate_root(cover, p)
        except OutOfSupport as err:
            raise TargetOutsideCover(f"target {tid}: {err}") from err
        by_root.setdefault(ri, []).append((tid, p))

    b_bar = cover.s ** cover.gamma

    def ceil_log(nj):
        k, p = 0, 1
        while p < nj:
            p *= b_bar
            k += 1
        return k

    # per-root tree depth: one level past the count's logarithm
    depths = {ri: ceil_log(len(pts)) + 1 if len(pts) > 1 else 1
              for ri, pts in by_root.items()}

    occupied = sorted(by_root)
    anchors = [cover.roots[ri].anchor for ri in occupied]
    ordered, c_eps0 = roots_tour(model, anchors)
    anchor_to_root = {cover.roots[ri].anchor: ri for ri in occupied}
    root_order = [anchor_to_root[a] for a in ordered]

    def work(ri):
        return _realize_root(model, cover, ri, by_root[ri], depths[ri])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pieces = dict(zip(occupied, pool.map(work, occupied)))
    else:
        pieces = {ri: work(ri) for ri in occupied}

    segments = []
    visited = []
    t = 0.0
    prev_anchor = None
    for ri in root_order:
        anchor = cover.roots[ri].anchor
        if prev_anchor is not None:
            leg = dyn.steer(model, prev_anchor, anchor)
            segments.extend(leg.segments)
            t += leg.duration
        seg, visits, dur = pieces[ri]
        segments.extend(seg)
        visited.extend((tid, t + vt) for tid, vt in visits)
        t += dur
        prev_anchor = anchor

    start = cover.roots[root_order[0]].anchor
    tour = Tour(dyn.Trajectory(model, start, tuple(segments)),
                tuple(visited), float(t))
    if with_info:
        info = {"c_eps0": c_eps0,
                "roots": {ri: len(by_root[ri]) for ri in occupied},
                "depths": depths,
                "root_order": root_order}
        return tour, info
    return tour


def tour_visits_all(tour, targets, tol=1e-6):
    """Every target reached: workspace distance at its visit time <= tol."""
    seen = set()
    for tid, vt in tour.visited:
        cfg = tour.trajectory.configuration_at(vt)
        d = math.dist(cfg[:len(targets[tid])], targets[tid])
        if d > tol:
            return False
        seen.add(tid)
    return len(seen) == len(targets)


def exact_small_tsp(model, targets, headings=1):
    """Optimal open collection tour by dynamic programming over subsets.

    States are (visited set, last target, last heading index); edges come
    from steering. Exact for models without a heading degree of freedom
    (headings collapses to 1); otherwise exact within the heading grid.
    """
    n = len(targets)
    if n == 0:
        return 0.0
    if n > 8:
        raise TooLarge(f"exact search capped at 8 targets, got {n}")
    if headings > 8:
        raise TooLarge(f"heading grid capped at 8, got {headings}")
    if headings < 1:
        raise ValueError("headings must be at least 1")
    with_heading = model.config_dim > model.workspace_dim
    h_count = headings if with_heading else 1
    angles = [2.0 * math.pi * k / h_count for k in range(h_count)]

    def config(i, h):
        p = tuple(float(v) for v in targets[i])
        return p + (angles[h],) if with_heading else p

    speed = _closed_form_speed(model)
    cost = {}
    for i in range(n):
        for hi in range(h_count):
            for j in range(n):
                if i == j:
                    continue
                for hj in range(h_count):
                    cost[i, hi, j, hj] = _steer_time(
                        model, config(i, hi), config(j, hj), speed)

    dp = {}
    for i in range(n):
        for h in range(h_count):
            dp[1 << i, i, h] = 0.0
    full = (1 << n) - 1
    for mask in range(1, full + 1):
        for (m0, last, h0), base in [((m, l, h), v)
                                     for (m, l, h), v in dp.items()
                                     if m == mask]:
            for j in range(n):
                if mask & (1 << j):
                    continue
                nm = mask | (1 << j)
                for hj in range(h_count):
                    cand = base + cost[last, h0, j, hj]
                    key = (nm, j, hj)
                    if cand < dp.get(key, math.inf):
                        dp[key] = cand
    return min(v for (m, _, _), v in dp.items() if m == full)


def trivial_bound(n, model, support, seed=0):
    """Linear bound C*n, C an inflated max steer time over support samples.

    512 configurations are sampled; models with a closed-form point-to-point
    time take the exact pairwise max, others estimate it over 2048 sampled
    pairs. The 1.2 inflation absorbs the sampling gap.
    """
    if n == 0:
        return 0.0
    rng = make_rng(seed, "trivial-bound")
    mins = np.asarray(support[0], dtype=float)
    maxs = np.asarray(support[1], dtype=float)
    pts = rng.uniform(mins, maxs, size=(512, len(mins)))
    speed = _closed_form_speed(model)
    if speed is not None:
        diff = pts[:, None, :] - pts[None, :, :]
        c = float(np.linalg.norm(diff, axis=2).max()) / speed
    elif model.model_id == "scaled_euclidean2":
        # straight-line time at the slowest speed bounds the grid steer
        diff = pts[:, None, :] - pts[None, :, :]
        c = float(np.linalg.norm(diff, axis=2).max()) / (
            model.c_pi * dyn.sigma_range(model)[0])
    else:
        angles = rng.uniform(0.0, 2.0 * math.pi, size=512)
        configs = [tuple(p) + (float(a),) for p, a in zip(pts, angles)]
        c = 0.0
        for _ in range(2048):
            i, j = rng.integers(512, size=2)
            if i == j:
                continue
            c = max(c, _steer_time(model, configs[int(i)], configs[int(j)]))
    return 1.2 * c * n
