"""Meshes and Galerkin assembly.

P1 elements on intervals and triangles for the parabolic families, cubic
Hermite elements (value and slope per node) for the beam. Assembled
matrices are returned dense.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from . import fields
from .errors import InvalidArgument, InvalidMesh, ParseError, QuadratureFailure

# 6-point degree-4 rule on the reference triangle (barycentric coordinates).
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
TRI_BARY = np.array(
    [
        [_A1, _A1, 1 - 2 * _A1],
        [_A1, 1 - 2 * _A1, _A1],
        [1 - 2 * _A1, _A1, _A1],
        [_A2, _A2, 1 - 2 * _A2],
        [_A2, 1 - 2 * _A2, _A2],
        [1 - 2 * _A2, _A2, _A2],
    ]
)
TRI_WEIGHTS = np.array([_W1] * 3 + [_W2] * 3)

GAUSS_X, GAUSS_W = np.polynomial.legendre.leggauss(5)


@dataclass(frozen=True)
class IntervalMesh:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or np.any(np.diff(nodes) <= 0):
            raise InvalidArgument("interval mesh nodes must be strictly increasing (at least 2)")
        object.__setattr__(self, "nodes", nodes)

    @property
    def endpoints(self):
        return float(self.nodes[0]), float(self.nodes[-1])

    @property
    def n_elements(self):
        return self.nodes.size - 1


@dataclass(frozen=True)
class TriMesh:
    nodes: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (t, 3), counter-clockwise
    boundary_edges: np.ndarray  # (e, 2)
    boundary_tags: np.ndarray  # (e,)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    def tags(self):
        return sorted(set(int(t) for t in self.boundary_tags))

    def boundary_nodes(self, tags=None):
        sel = np.ones(len(self.boundary_tags), dtype=bool) if tags is None else np.isin(self.boundary_tags, list(tags))
        return np.unique(self.boundary_edges[sel].ravel())


@dataclass(frozen=True)
class DofMap:
    total_dofs: int
    free: np.ndarray
    constrained: np.ndarray

    def __post_init__(self):
        both = np.concatenate([self.free, self.constrained])
        if both.size != self.total_dofs or np.unique(both).size != self.total_dofs:
            raise InvalidArgument("free and constrained DOFs must partition all DOFs")


@dataclass
class FemMatrices:
    """Assembled matrices on free DOFs (``*_all`` keep every DOF, for lifts)."""

    mass: np.ndarray
    diffusion_stiffness: np.ndarray = None
    convection_reaction: np.ndarray = None
    bending_stiffness: np.ndarray = None
    mass_all: np.ndarray = None
    stiffness_all: np.ndarray = None
    convection_reaction_all: np.ndarray = None
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------- meshes


def build_interval_mesh(a, b, n_elements):
    if not a < b:
        raise InvalidArgument(f"need a < b, got ({a}, {b})")
    if int(n_elements) < 1:
        raise InvalidArgument("need at least one element")
    return IntervalMesh(np.linspace(a, b, int(n_elements) + 1))


def build_rect_mesh(x_range, y_range, nx, ny, tags=None):
    """Structured triangulation of a rectangle.

    Each cell is split into two counter-clockwise triangles. `tags` maps the
    side names ``left/right/bottom/top`` to integer boundary tags (default 0).
    """
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise InvalidArgument("nx and ny must be positive")
    (x0, x1), (y0, y1) = x_range, y_range
    if not (x0 < x1 and y0 < y1):
        raise InvalidArgument("empty rectangle")
    tags = dict(tags or {})
    unknown = set(tags) - {"left", "right", "bottom", "top"}
    if unknown:
        raise InvalidArgument(f"unknown sides {sorted(unknown)}")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)  # node (i, j) -> j*(nx+1) + i
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def idx(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    edges, etags = [], []
    for i in range(nx):
        edges.append((idx(i, 0), idx(i + 1, 0)))
        etags.append(tags.get("bottom", 0))
    for j in range(ny):
        edges.append((idx(nx, j), idx(nx, j + 1)))
        etags.append(tags.get("right", 0))
    for i in range(nx, 0, -1):
        edges.append((idx(i, ny), idx(i - 1, ny)))
        etags.append(tags.get("top", 0))
    for j in range(ny, 0, -1):
        edges.append((idx(0, j), idx(0, j - 1)))
        etags.append(tags.get("left", 0))
    return TriMesh(nodes, np.array(tris, dtype=int), np.array(edges, dtype=int), np.array(etags, dtype=int))


def validate_mesh(mesh):
    """Check the TriMesh invariants; raise InvalidMesh naming the violation."""
    n = mesh.n_nodes
    tri, edges = mesh.triangles, mesh.boundary_edges
    if tri.size and (tri.min() < 0 or tri.max() >= n):
        raise InvalidMesh("triangle references a missing node")
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise InvalidMesh("boundary edge references a missing node")
    if np.any(_signed_areas(mesh) <= 0):
        raise InvalidMesh("orientation: triangle with non-positive signed area (must be counter-clockwise)")
    count = {}
    for t in tri:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            key = (min(a, b), max(a, b))
            count[key] = count.get(key, 0) + 1
    for a, b in edges:
        c = count.get((min(a, b), max(a, b)), 0)
        if c == 0:
            raise InvalidMesh(f"boundary edge not on any triangle: ({a}, {b})")
        if c > 1:
            raise InvalidMesh(f"boundary edge ({a}, {b}) is shared by {c} triangles")
    for tag in mesh.tags():
        sel = edges[mesh.boundary_tags == tag]
        if not _connected(sel):
            raise InvalidMesh(f"boundary edges with tag {tag} do not form a connected chain")
    return mesh


def _connected(edges):
    if len(edges) == 0:
        return True
    adj = {}
    for a, b in edges:
        adj.setdefault(int(a), set()).add(int(b))
        adj.setdefault(int(b), set()).add(int(a))
    start = next(iter(adj))
    seen, stack = {start}, [start]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(adj)


def _signed_areas(mesh):
    p = mesh.nodes[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def load_mesh_file(path):
    """Read the line-oriented ``nodes/triangles/boundary`` mesh format."""
    lines = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            lines.append((lineno, body.split()))
    pos = 0

    def header(name):
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(f"missing '{name} <count>' section", lines[-1][0] if lines else 1)
        lineno, tok = lines[pos]
        if len(tok) != 2 or tok[0] != name:
            raise ParseError(f"expected '{name} <count>', got {' '.join(tok)!r}", lineno)
        try:
            count = int(tok[1])
        except ValueError:
            raise ParseError(f"bad count {tok[1]!r}", lineno) from None
        pos += 1
        return count

    def rows(count, width, conv):
        nonlocal pos
        out = []
        for _ in range(count):
            if pos >= len(lines):
                raise ParseError("unexpected end of file", lines[-1][0])
            lineno, tok = lines[pos]
            if len(tok) != width:
                raise ParseError(f"expected {width} values, got {len(tok)}", lineno)
            try:
                out.append([conv(t) for t in tok])
            except ValueError:
                raise ParseError(f"cannot parse {' '.join(tok)!r}", lineno) from None
            pos += 1
        return out

    nodes = np.array(rows(header("nodes"), 2, float), dtype=float).reshape(-1, 2)
    tris = np.array(rows(header("triangles"), 3, int), dtype=int).reshape(-1, 3)
    bnd = np.array(rows(header("boundary"), 3, int), dtype=int).reshape(-1, 3)
    if pos != len(lines):
        raise ParseError("trailing content after boundary section", lines[pos][0])
    mesh = TriMesh(nodes, tris, bnd[:, :2].copy(), bnd[:, 2].copy())
    return validate_mesh(mesh)


def write_mesh_file(mesh, path):
    out = [f"nodes {mesh.n_nodes}"]
    out += [f"{x!r} {y!r}" for x, y in mesh.nodes.tolist()]
    out.append(f"triangles {len(mesh.triangles)}")
    out += [" ".join(map(str, t)) for t in mesh.triangles.tolist()]
    out.append(f"boundary {len(mesh.boundary_edges)}")
    out += [f"{a} {b} {t}" for (a, b), t in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags.tolist())]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def boundary_trace_rows(mesh, tag):
    """Ordered node chain of boundary `tag` and its normalized arclength.

    The walk starts at the chain end with the lexicographically smallest
    ``(x, y)``; closed loops start at the smallest node overall.
    """
    sel = mesh.boundary_edges[mesh.boundary_tags == tag]
    if len(sel) == 0:
        raise InvalidArgument(f"no boundary edges with tag {tag}")
    adj = {}
    for a, b in sel:
        adj.setdefault(int(a), []).append(int(b))
        adj.setdefault(int(b), []).append(int(a))
    ends = [v for v, nb in adj.items() if len(nb) == 1]
    if any(len(nb) > 2 for nb in adj.values()):
        raise InvalidArgument(f"boundary tag {tag} branches; not a chain")
    candidates = ends if ends else list(adj)
    start = min(candidates, key=lambda v: (mesh.nodes[v, 0], mesh.nodes[v, 1]))
    chain, prev = [start], None
    while len(chain) <= len(adj):
        cands = [v for v in adj[chain[-1]] if v != prev]
        if not cands:
            break
        if cands[0] == start:
            chain.append(start)
            break
        prev = chain[-1]
        chain.append(cands[0])
    if len(set(chain)) != len(adj):
        raise InvalidArgument(f"boundary tag {tag} is not a single connected chain")
    pts = mesh.nodes[chain]
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    return np.array(chain, dtype=int), s / s[-1]


# ------------------------------------------------------------- assembly


def _quad_points(mesh):
    p = mesh.nodes[mesh.triangles]  # (t, 3, 2)
    return np.einsum("qk,tkd->tqd", TRI_BARY, p)  # (t, q, 2)


def _p1_gradients(mesh):
    p = mesh.nodes[mesh.triangles]
    area = _signed_areas(mesh)
    # grad(lambda_k) = rot90(opposite edge) / (2*area)
    e0 = p[:, 2] - p[:, 1]
    e1 = p[:, 0] - p[:, 2]
    e2 = p[:, 1] - p[:, 0]
    grads = np.stack([np.column_stack([-e[:, 1], e[:, 0]]) for e in (e0, e1, e2)], axis=1)
    return grads / (2 * area)[:, None, None], area


def _scatter(mesh, local):
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_nodes
    return sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).toarray()


def _eval_field(f, pts, what):
    vals = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise QuadratureFailure(f"{what} is not finite at a quadrature point")
    return vals


def assemble_parabolic_2d(mesh, nu, alpha=None, beta=None, dirichlet_tags=None):
    """P1 matrices for ``w_t = nu*Lap(w) - alpha*w - div(beta*w)``.

    Returns FemMatrices with ``mass`` M, ``diffusion_stiffness`` K (so the
    diffusion part acts as ``-M^{-1} nu K``) and ``convection_reaction`` R
    with ``R[i, j] = int(alpha phi_j phi_i) - int(phi_j beta . grad phi_i)``
    (divergence form integrated by parts against test functions that vanish
    on the boundary). All restricted to interior DOFs; ``*_all`` hold every
    node.
    """
    if nu <= 0:
        raise InvalidArgument("nu must be positive")
    validate_mesh(mesh)
    _require_full_boundary(mesh)
    alpha = alpha or fields.Constant(0.0)
    beta = beta or (fields.Constant(0.0), fields.Constant(0.0))
    grads, area = _p1_gradients(mesh)
    qp = _quad_points(mesh)
    wq = TRI_WEIGHTS[None, :] * area[:, None]  # (t, q)
    phi = TRI_BARY  # (q, 3) basis values at quad points

    mass_loc = np.einsum("tq,qi,qj->tij", wq, phi, phi)
    stiff_loc = area[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)
    a_vals = _eval_field(alpha, qp, "alpha")
    b1 = _eval_field(beta[0], qp, "beta_1")
    b2 = _eval_field(beta[1], qp, "beta_2")
    react_loc = np.einsum("tq,tq,qi,qj->tij", wq, a_vals, phi, phi)
    bgrad = b1[:, :, None] * grads[:, None, :, 0] + b2[:, :, None] * grads[:, None, :, 1]  # (t, q, i)
    conv_loc = np.einsum("tq,tqi,qj->tij", wq, bgrad, phi)

    M = _scatter(mesh, mass_loc)
    K = _scatter(mesh, stiff_loc)
    R = _scatter(mesh, react_loc - conv_loc)
    dofmap = parabolic_dofmap(mesh, dirichlet_tags)
    f = dofmap.free
    mats = FemMatrices(
        mass=M[np.ix_(f, f)],
        diffusion_stiffness=K[np.ix_(f, f)],
        convection_reaction=R[np.ix_(f, f)],
        mass_all=M,
        stiffness_all=K,
        convection_reaction_all=R,
    )
    return mats, dofmap


def _require_full_boundary(mesh):
    count = {}
    for t in mesh.triangles:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            key = (min(a, b), max(a, b))
            count[key] = count.get(key, 0) + 1
    geometric = {k for k, c in count.items() if c == 1}
    listed = {(min(a, b), max(a, b)) for a, b in mesh.boundary_edges}
    if geometric - listed:
        raise InvalidMesh(
            f"{len(geometric - listed)} boundary edges carry no tag (Dirichlet data must cover the boundary)"
        )


def parabolic_dofmap(mesh, dirichlet_tags=None):
    constrained = mesh.boundary_nodes(dirichlet_tags)
    free = np.setdiff1d(np.arange(mesh.n_nodes), constrained)
    return DofMap(mesh.n_nodes, free, constrained)


def _p1_1d_local(h):
    mass = h / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    stiff = 1.0 / h * np.array([[1.0, -1.0], [-1.0, 1.0]])
    return mass, stiff


def assemble_heat_1d_neumann(mesh):
    """P1 mass and stiffness on every node (natural zero-flux conditions)."""
    n = mesh.nodes.size
    M = np.zeros((n, n))
    K = np.zeros((n, n))
    for e, h in enumerate(np.diff(mesh.nodes)):
        m, k = _p1_1d_local(h)
        sl = slice(e, e + 2)
        M[sl, sl] += m
        K[sl, sl] += k
    dofmap = DofMap(n, np.arange(n), np.zeros(0, dtype=int))
    return FemMatrices(mass=M, diffusion_stiffness=K, mass_all=M, stiffness_all=K), dofmap


def hermite_element_matrices(h):
    """Exact cubic-Hermite mass and bending matrices, DOFs (w0, w0', w1, w1')."""
    mass = (
        h
        / 420.0
        * np.array(
            [
                [156, 22 * h, 54, -13 * h],
                [22 * h, 4 * h * h, 13 * h, -3 * h * h],
                [54, 13 * h, 156, -22 * h],
                [-13 * h, -3 * h * h, -22 * h, 4 * h * h],
            ]
        )
    )
    bend = (
        1.0
        / h**3
        * np.array(
            [
                [12, 6 * h, -12, 6 * h],
                [6 * h, 4 * h * h, -6 * h, 2 * h * h],
                [-12, -6 * h, 12, -6 * h],
                [6 * h, 2 * h * h, -6 * h, 4 * h * h],
            ]
        )
    )
    return mass, bend


def assemble_beam_hermite(mesh, clamp_left=True):
    """Hermite mass ``int(phi psi)`` and bending ``int(phi'' psi'')`` matrices.

    Global DOF ``2*i`` is the value and ``2*i + 1`` the slope at node i. The
    two DOFs at the left end are constrained (clamped) unless
    ``clamp_left=False``.
    """
    n = mesh.nodes.size
    M = np.zeros((2 * n, 2 * n))
    S = np.zeros((2 * n, 2 * n))
    for e, h in enumerate(np.diff(mesh.nodes)):
        m, s = hermite_element_matrices(h)
        sl = slice(2 * e, 2 * e + 4)
        M[sl, sl] += m
        S[sl, sl] += s
    constrained = np.array([0, 1]) if clamp_left else np.zeros(0, dtype=int)
    free = np.setdiff1d(np.arange(2 * n), constrained)
    dofmap = DofMap(2 * n, free, constrained)
    mats = FemMatrices(
        mass=M[np.ix_(free, free)],
        bending_stiffness=S[np.ix_(free, free)],
        mass_all=M,
        stiffness_all=S,
    )
    return mats, dofmap


# ------------------------------------------------------- basis evaluation


def p1_basis_1d(t):
    """P1 shape functions on the reference element at local coordinate t."""
    t = np.asarray(t, dtype=float)
    return np.stack([1 - t, t], axis=-1)


def hermite_basis(t, h, derivative=0):
    """Cubic Hermite shape functions (or derivatives in x) at local t in [0, 1]."""
    t = np.asarray(t, dtype=float)
    if derivative == 0:
        return np.stack(
            [1 - 3 * t**2 + 2 * t**3, h * (t - 2 * t**2 + t**3), 3 * t**2 - 2 * t**3, h * (-(t**2) + t**3)], -1
        )
    if derivative == 1:
        return np.stack([(-6 * t + 6 * t**2) / h, 1 - 4 * t + 3 * t**2, (6 * t - 6 * t**2) / h, -2 * t + 3 * t**2], -1)
    if derivative == 2:
        return np.stack([(-6 + 12 * t) / h**2, (-4 + 6 * t) / h, (6 - 12 * t) / h**2, (-2 + 6 * t) / h], -1)
    raise InvalidArgument("derivative must be 0, 1 or 2")


def load_vector_1d(mesh, func, space="p1", support=None):
    """``int(func * phi_j)`` over all DOFs by 5-point Gauss per element.

    With `support` = (a, b) each element is clipped to the interval first, so
    indicator weights are integrated exactly.
    """
    x = mesh.nodes
    ndof = x.size if space == "p1" else 2 * x.size
    out = np.zeros(ndof)
    for e in range(mesh.n_elements):
        lo, hi = x[e], x[e + 1]
        if support is not None:
            lo, hi = max(lo, support[0]), min(hi, support[1])
            if hi <= lo:
                continue
        h = x[e + 1] - x[e]
        xq = 0.5 * (hi - lo) * GAUSS_X + 0.5 * (hi + lo)
        wq = 0.5 * (hi - lo) * GAUSS_W
        fx = np.asarray(func(xq), dtype=float)
        if not np.all(np.isfinite(fx)):
            raise QuadratureFailure("sensor weight not finite")
        t = (xq - x[e]) / h
        if space == "p1":
            out[e : e + 2] += (wq * fx) @ p1_basis_1d(t)
        else:
            out[2 * e : 2 * e + 4] += (wq * fx) @ hermite_basis(t, h)
    return out


def output_rows(mesh, space, sensors, dofmap=None):
    """Sensor rows ``int(c_k phi_j)`` restricted to free DOFs.

    `space` is ``"p1"`` (interval mesh), ``"hermite"`` (beam) or ``"p1_2d"``.
    Returns ``(rows_free, rows_all)``.
    """
    rows = []
    for c in sensors:
        if space in ("p1", "hermite"):
            a, b = mesh.endpoints
            sup = fields.support_interval(c)
            if sup is not None and (sup[0] < a - 1e-12 or sup[1] > b + 1e-12):
                raise InvalidArgument(f"sensor support {sup} outside domain ({a}, {b})")
            rows.append(load_vector_1d(mesh, c, space, sup))
        elif space == "p1_2d":
            if isinstance(c, fields.Rect):
                lo, hi = mesh.nodes.min(axis=0), mesh.nodes.max(axis=0)
                if c.x0 < lo[0] - 1e-12 or c.x1 > hi[0] + 1e-12 or c.y0 < lo[1] - 1e-12 or c.y1 > hi[1] + 1e-12:
                    raise InvalidArgument("sensor rectangle outside the mesh bounding box")
            qp = _quad_points(mesh)
            area = _signed_areas(mesh)
            vals = _eval_field(c, qp, "sensor weight")
            local = np.einsum("tq,tq,qi->ti", TRI_WEIGHTS[None, :] * area[:, None], vals, TRI_BARY)
            row = np.zeros(mesh.n_nodes)
            np.add.at(row, mesh.triangles, local)
            rows.append(row)
        else:
            raise InvalidArgument(f"unknown space {space!r}")
    rows_all = np.array(rows).reshape(len(rows), -1)
    if dofmap is None:
        return rows_all, rows_all
    return rows_all[:, dofmap.free], rows_all
