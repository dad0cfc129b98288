"""Stopping-time sparse selection on a shifted delta-grid.

Data live on the grid of the root cube ``Q0`` whose cells are the cubes of
the finest scale, so every cube of the tree is a block of whole cells and all
cube averages are block means.  The selection is top-down: starting from a
cube ``S`` the maximal strict subcubes where either L^p average jumps by the
factor ``C`` are selected, and the procedure recurses inside them.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .averaging import DEFAULT_NODES, GridFunction, TimeSampling, block_sampling, interpolate, local_max
from .delta_grid import (
    DeltaCube,
    Dilation,
    MeasuredBox,
    all_shifts,
    cube_exponents,
    grid_cube_containing,
)
from .geometry import Cutoff, Family, SurfaceSpec


class SparsenessError(ValueError):
    """Selection could not be certified or parameters rule out sparseness."""


def _check_exponent(p: float, name: str = "p") -> None:
    if not p >= 1:
        raise ValueError(f"{name} must be >= 1, got {p}")


def cube_mask(f: GridFunction, q: DeltaCube) -> np.ndarray:
    """Cells of ``f`` whose centres lie in ``q``."""
    box = q.box()
    masks = []
    for j in range(f.n):
        c = f.axis_centers(j)
        masks.append((c >= box.lower[j]) & (c < box.upper[j]))
    out = masks[0]
    for m in masks[1:]:
        out = np.multiply.outer(out, m)
    return out.astype(bool)


def average_pq(f: GridFunction, q: DeltaCube, p: float) -> float:
    """``(|Q|^-1 sum_{cells in Q} |f|^p cell)^(1/p)``."""
    _check_exponent(p)
    mask = cube_mask(f, q)
    if not mask.any():
        raise ValueError("cube does not meet the grid")
    total = float(np.sum(np.abs(f.values[mask]) ** p)) * f.cell_measure
    return (total / float(q.volume)) ** (1.0 / p)


@dataclass(frozen=True)
class CubeTree:
    """All cubes of one shifted grid between ``root`` and ``depth`` scales below it."""

    root: DeltaCube
    depth: int

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")

    @property
    def scales(self) -> list[int]:
        return [self.root.scale - i for i in range(self.depth + 1)]

    @property
    def counts(self) -> list[tuple[int, ...]]:
        """Cubes per axis at each level."""
        e0 = np.asarray(self.root.exponents)
        return [tuple(int(v) for v in 2 ** (e0 - np.asarray(cube_exponents(k, self.root.dilation))))
                for k in self.scales]

    @property
    def resolution(self) -> tuple[int, ...]:
        return self.counts[-1]

    def factors(self, level: int) -> tuple[int, ...]:
        """Children per axis from ``level`` to ``level + 1``."""
        a, b = self.counts[level], self.counts[level + 1]
        return tuple(y // x for x, y in zip(a, b))

    def cells_per_cube(self, level: int) -> int:
        return int(np.prod(self.resolution)) // int(np.prod(self.counts[level]))

    def box(self) -> MeasuredBox:
        return self.root.box()

    def grid(self, values=None) -> GridFunction:
        vals = np.zeros(self.resolution) if values is None else values
        return GridFunction(self.box(), vals)

    def resample(self, f: GridFunction) -> GridFunction:
        """Interpolate ``f`` onto the tree's cell centres."""
        g = self.grid()
        return g.with_values(interpolate(f, g.centers()))

    def matches(self, f: GridFunction) -> bool:
        return f.resolution == self.resolution and np.allclose(f.box.lower, self.box().lower) \
            and np.allclose(f.box.upper, self.box().upper)

    def level_means(self, values: np.ndarray) -> list[np.ndarray]:
        """Block means of ``values`` at every level, coarsest first."""
        out = [np.asarray(values, dtype=float)]
        for level in range(self.depth - 1, -1, -1):
            fac = self.factors(level)
            cur = out[0]
            shape = []
            for n, r in zip(self.counts[level], fac):
                shape += [n, r]
            out.insert(0, cur.reshape(shape).mean(axis=tuple(range(1, 2 * len(fac), 2))))
        return out

    def cube(self, level: int, idx: Sequence[int]) -> DeltaCube:
        k = self.scales[level]
        lo = [b[0] for b in self.root.bounds()]
        sides = [Fraction(2) ** e for e in cube_exponents(k, self.root.dilation)]
        center = [l + (i + Fraction(1, 2)) * s for l, i, s in zip(lo, idx, sides)]
        return grid_cube_containing(center, k, self.root.shift, self.root.dilation)

    def sub_slices(self, level: int, idx: Sequence[int], target: int) -> tuple[slice, ...]:
        """Index block at ``target`` level covered by cube ``(level, idx)``."""
        r = [b // a for a, b in zip(self.counts[level], self.counts[target])]
        return tuple(slice(i * f, (i + 1) * f) for i, f in zip(idx, r))


@dataclass
class SparseCollection:
    root: DeltaCube
    cubes: list[DeltaCube]
    parents: list[int | None]
    witness_cells: list[int]
    cube_cells: list[int]
    tree: CubeTree | None = field(default=None, repr=False)
    entries: list[tuple[int, tuple[int, ...]]] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.cubes)

    def witness_fraction(self, i: int) -> float:
        return self.witness_cells[i] / self.cube_cells[i]

    def children_of(self, i: int) -> list[int]:
        return [j for j, p in enumerate(self.parents) if p == i]

    def is_sparse(self) -> bool:
        return all(4 * w > c for w, c in zip(self.witness_cells, self.cube_cells))

    def to_json(self) -> dict:
        return {
            "root": _cube_json(self.root),
            "cubes": [
                dict(_cube_json(q), witness_volume_fraction=self.witness_fraction(i))
                for i, q in enumerate(self.cubes)
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _cube_json(q: DeltaCube) -> dict:
    return {"k": q.scale, "position": list(q.position), "shift": [str(s) for s in q.shift]}


def cube_from_json(doc: dict, dilation: Dilation) -> DeltaCube:
    return DeltaCube(int(doc["k"]), tuple(int(v) for v in doc["position"]),
                     tuple(Fraction(s) for s in doc["shift"]), dilation)


def _check_sparse_constant(C: float, p: float, qp: float) -> None:
    if not C > 1:
        raise SparsenessError(f"C must exceed 1, got {C}")
    if C ** -p + C ** -qp > 0.25:
        raise SparsenessError(f"C={C} too small: C^-p + C^-q' = {C ** -p + C ** -qp:.4f} > 1/4")


def stopping_cubes(tree: CubeTree, tests: Sequence[tuple[list[np.ndarray], float]],
                   level: int, idx: tuple[int, ...]) -> list[tuple[int, tuple[int, ...]]]:
    """Maximal strict subcubes of ``(level, idx)`` where some powered mean exceeds its threshold.

    ``tests`` pairs level-mean arrays of ``|h|^p`` with the factor ``C^p``.
    """
    out = []
    covered = None
    for lv in range(level + 1, tree.depth + 1):
        sl = tree.sub_slices(level, idx, lv)
        hit = np.zeros(tuple(s.stop - s.start for s in sl), dtype=bool)
        for means, cp in tests:
            hit |= means[lv][sl] > cp * means[level][idx]
        if covered is not None:
            hit &= ~covered
        for rel in np.argwhere(hit):
            out.append((lv, tuple(int(s.start + r) for s, r in zip(sl, rel))))
        cov = hit if covered is None else (covered | hit)
        if lv < tree.depth:
            for ax, fac in enumerate(tree.factors(lv)):
                cov = np.repeat(cov, fac, axis=ax)
        covered = cov
    return out


def select_sparse(f: GridFunction, g: GridFunction, tree: CubeTree, p: float, qp: float,
                  C: float = 10.0, max_depth: int = 64) -> SparseCollection:
    """Recursive stopping-time selection; returns a certified sparse collection."""
    _check_exponent(p)
    _check_exponent(qp, "q'")
    _check_sparse_constant(C, p, qp)
    if not (tree.matches(f) and tree.matches(g)):
        raise ValueError("f and g must live on the tree's grid")
    tests = [(tree.level_means(np.abs(f.values) ** p), C ** p),
             (tree.level_means(np.abs(g.values) ** qp), C ** qp)]
    root_idx = (0,) * tree.root.n
    entries = [(0, root_idx)]
    parents: list[int | None] = [None]
    gens = [0]
    stop_children: list[list[int]] = [[]]
    head = 0
    while head < len(entries):
        level, idx = entries[head]
        for child in stopping_cubes(tree, tests, level, idx):
            if gens[head] + 1 > max_depth:
                raise SparsenessError(f"selection exceeded max_depth={max_depth}")
            entries.append(child)
            parents.append(head)
            gens.append(gens[head] + 1)
            stop_children.append([])
            stop_children[head].append(len(entries) - 1)
        head += 1
    cube_cells = [tree.cells_per_cube(lv) for lv, _ in entries]
    witness = [cube_cells[i] - sum(cube_cells[j] for j in stop_children[i]) for i in range(len(entries))]
    coll = SparseCollection(
        root=tree.root,
        cubes=[tree.cube(lv, idx) for lv, idx in entries],
        parents=parents,
        witness_cells=witness,
        cube_cells=cube_cells,
        tree=tree,
        entries=entries,
    )
    certify(coll)
    return coll


def witness_owner(coll: SparseCollection) -> np.ndarray:
    """Finest-grid array naming the collection member whose witness owns each cell (-1: none).

    Raises if two witnesses claim the same cell.
    """
    tree = coll.tree
    if tree is None:
        raise ValueError("collection has no tree")
    owner = np.full(tree.resolution, -1, dtype=np.int64)
    kids = {i: coll.children_of(i) for i in range(len(coll))}
    for i, (lv, idx) in enumerate(coll.entries):
        mask = np.zeros(tree.resolution, dtype=bool)
        mask[tree.sub_slices(lv, idx, tree.depth)] = True
        for j in kids[i]:
            clv, cidx = coll.entries[j]
            mask[tree.sub_slices(clv, cidx, tree.depth)] = False
        if np.any(owner[mask] != -1):
            raise SparsenessError("witness sets overlap")
        owner[mask] = i
    return owner


def certify(coll: SparseCollection) -> None:
    """Exact sparseness certificate: disjoint witnesses and ``4 |E_S| > |S|`` in cell counts."""
    owner = witness_owner(coll)
    counts = np.bincount(owner[owner >= 0].ravel(), minlength=len(coll))
    for i, (w, c) in enumerate(zip(coll.witness_cells, coll.cube_cells)):
        if counts[i] != w:
            raise SparsenessError(f"witness {i} cell count mismatch")
        if not 4 * w > c:
            raise SparsenessError(f"cube {i} fails |E_S| > |S|/4 ({w}/{c})")
    for i, par in enumerate(coll.parents):
        if par is not None and not coll.cubes[par].contains_cube(coll.cubes[i]):
            raise SparsenessError("selected cube not nested in its parent")


def brute_force_stopping(f: GridFunction, g: GridFunction, root: DeltaCube, depth: int,
                         p: float, qp: float, C: float) -> set[tuple]:
    """Oracle: enumerate the cube tree explicitly and keep maximal stopping cubes of ``root``."""
    fr, gr = average_pq(f, root, p), average_pq(g, root, qp)
    found = set()

    def walk(q: DeltaCube, left: int):
        if left == 0:
            return
        for child in q.children():
            if average_pq(f, child, p) > C * fr or average_pq(g, child, qp) > C * gr:
                found.add((child.scale, child.position))
            else:
                walk(child, left - 1)

    walk(root, depth)
    return found


def sparse_form(coll: SparseCollection, f: GridFunction, g: GridFunction, p: float, qp: float) -> float:
    """``sum_S |S| <f>_{S,p} <g>_{S,q'}``."""
    _check_exponent(p)
    _check_exponent(qp, "q'")
    tree = coll.tree
    if tree is not None and coll.entries and tree.matches(f) and tree.matches(g):
        mf = tree.level_means(np.abs(f.values) ** p)
        mg = tree.level_means(np.abs(g.values) ** qp)
        total = 0.0
        for q, (lv, idx) in zip(coll.cubes, coll.entries):
            total += float(q.volume) * mf[lv][idx] ** (1 / p) * mg[lv][idx] ** (1 / qp)
        return total
    return float(sum(float(q.volume) * average_pq(f, q, p) * average_pq(g, q, qp) for q in coll.cubes))


@dataclass
class CZDecomposition:
    good: GridFunction
    bad_cubes: list[DeltaCube]
    bad_parts: list[GridFunction]
    threshold: float
    good_bound: float


def cz_decompose(f: GridFunction, tree: CubeTree, p: float, C: float) -> CZDecomposition:
    """Calderon-Zygmund split at height ``C <f>_{Q0,p}``.

    Bad cubes are the maximal strict subcubes above the threshold;
    ``b_P = (f - mean_P f) 1_P`` and ``f_inf = f - sum b_P``.
    """
    _check_exponent(p)
    if not C > 1:
        raise SparsenessError(f"C must exceed 1, got {C}")
    if not tree.matches(f):
        raise ValueError("f must live on the tree's grid")
    means = tree.level_means(np.abs(f.values) ** p)
    root_idx = (0,) * tree.root.n
    bad = stopping_cubes(tree, [(means, C ** p)], 0, root_idx)
    threshold = C * float(means[0][root_idx]) ** (1 / p)
    good = np.array(f.values, dtype=float)
    cubes, parts = [], []
    ratio = 1.0
    for lv, idx in bad:
        sl = tree.sub_slices(lv, idx, tree.depth)
        block = f.values[sl]
        b = np.zeros(tree.resolution)
        b[sl] = block - block.mean()
        good[sl] = block.mean()
        cubes.append(tree.cube(lv, idx))
        parts.append(tree.grid(b))
        ratio = max(ratio, tree.cells_per_cube(lv - 1) / tree.cells_per_cube(lv))
    return CZDecomposition(tree.grid(good), cubes, parts, threshold, ratio ** (1 / p) * threshold)


def root_for_box(box: MeasuredBox, shift, dilation: Dilation, k_max: int = 64) -> DeltaCube:
    """Smallest-scale cube of the shifted grid containing the closed box."""
    lo = [Fraction(v) for v in box.lower]
    hi = [Fraction(v) for v in box.upper]
    for k in range(-64, k_max + 1):
        q = grid_cube_containing(lo, k, shift, dilation)
        if all(b_lo <= l and h < b_hi for (b_lo, b_hi), l, h in zip(q.bounds(), lo, hi)):
            return q
    raise ValueError("no containing cube in the scale range")


@dataclass(frozen=True)
class DominationReport:
    pairing: float
    forms: dict
    best_shift: tuple
    ratio: float
    collections: dict = field(repr=False, default_factory=dict)


def pairing(spec, cutoff, f: GridFunction, g: GridFunction, ts: TimeSampling,
            nodes: int = DEFAULT_NODES) -> float:
    """``<M f, g>`` on ``g``'s grid, skipping cells where ``g`` vanishes."""
    centers = g.centers().reshape(-1, g.n)
    gv = g.values.reshape(-1)
    live = gv != 0
    if not live.any():
        return 0.0
    mf = local_max(spec, cutoff, f, centers[live], ts, nodes)
    return float(np.sum(mf * gv[live]) * g.cell_measure)


def support_box(fs: Sequence[GridFunction]) -> MeasuredBox:
    """Bounding box of the cells where any of ``fs`` is nonzero."""
    lo = np.full(fs[0].n, np.inf)
    hi = np.full(fs[0].n, -np.inf)
    for f in fs:
        nz = np.argwhere(f.values != 0)
        if nz.size == 0:
            continue
        h = f.spacing
        base = np.asarray(f.box.lower)
        lo = np.minimum(lo, base + nz.min(axis=0) * h)
        hi = np.maximum(hi, base + (nz.max(axis=0) + 1) * h)
    if not np.all(np.isfinite(lo)):
        raise ValueError("all functions vanish")
    return MeasuredBox(tuple(lo), tuple(hi))


def verify_sparse_domination(spec, cutoff, f: GridFunction, g: GridFunction, p: float, qp: float,
                             k_range: Sequence[int], depth: int = 6, C: float = 10.0,
                             shifts=None, per_block: int = 64,
                             nodes: int = DEFAULT_NODES) -> DominationReport:
    """``<M f, g> / max_s Lambda_s`` with one sparse collection per shifted grid."""
    if np.all(f.values == 0) or np.all(g.values == 0):
        return DominationReport(0.0, {}, (), 0.0)
    if np.any(f.values < 0) or np.any(g.values < 0):
        raise ValueError("sparse domination check expects nonnegative data")
    ts = block_sampling(spec, cutoff, k_range, per_block)
    pair = pairing(spec, cutoff, f, g, ts, nodes)
    sbox = support_box([f, g])
    dil = spec.dilation
    forms, colls = {}, {}
    for s in shifts or all_shifts(dil.n):
        try:
            root = root_for_box(sbox, s, dil)
        except ValueError:
            # a box straddling a point that every cube of this grid avoids
            continue
        tree = CubeTree(root, depth)
        fr, gr = tree.resample(f), tree.resample(g)
        coll = select_sparse(fr, gr, tree, p, qp, C)
        key = tuple(str(v) for v in s)
        forms[key] = sparse_form(coll, fr, gr, p, qp)
        colls[key] = coll
    if not forms:
        raise ValueError("no shifted grid has a cube containing the support")
    best = max(forms, key=forms.get)
    lam = forms[best]
    return DominationReport(pair, forms, best, pair / lam if lam > 0 else math.inf, colls)


def parabola_model():
    """Parabola ``(x, x**2)`` with a bump cutoff on ``[1/2, 2]``."""
    spec = SurfaceSpec(Family.HOMOGENEOUS_CURVE, 2)
    return spec, Cutoff(0.75, "bump", (1.25,))


def indicator_pair(j: int = 0, z=(0.0, 0.0), resolution: int = 32) -> tuple[GridFunction, GridFunction]:
    """``f = 1_[0,1]^2`` and ``g = 1_[1,5/2]^2``, dilated by ``(2**j, 4**j)`` and translated by ``z``."""
    s = np.array([2.0**j, 4.0**j])
    z = np.asarray(z, dtype=float)
    box = MeasuredBox(tuple(np.array([-0.5, -0.5]) * s + z), tuple(np.array([3.0, 3.0]) * s + z))

    def ind(lo, hi):
        lo, hi = np.asarray(lo) * s + z, np.asarray(hi) * s + z
        return lambda x: np.all((x >= lo) & (x <= hi), axis=-1).astype(float)

    f = GridFunction.sample(box, (resolution, resolution), ind((0, 0), (1, 1)))
    g = GridFunction.sample(box, (resolution, resolution), ind((1, 1), (2.5, 2.5)))
    return f, g


def parabola_window(j: int = 0) -> range:
    """Scale window of dyadic blocks covering the dilations that matter for the pair at level ``j``."""
    return range(j - 3, j + 4)
