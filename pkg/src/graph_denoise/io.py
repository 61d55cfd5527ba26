"""Text formats for graphs, matrices, framelet coefficients and run state.

Edge lists hold one ``i j [w]`` per line, whitespace separated and
0-indexed; ``#`` starts a comment, and a ``# nodes N`` line fixes the node
count so trailing isolated nodes survive a round trip. Matrices are
comma-separated with 17 significant digits, which round-trips float64.
"""

from __future__ import annotations

import hashlib
import re
from pathlib import Path

import numpy as np

from .ablations import NodeState
from .dot import DotState
from .framelet import Channel, Coefficients, FrameletSystem
from .graph import Graph, GraphError, build_graph

NODES_RE = re.compile(r"^#\s*nodes\s*[:=]?\s*(\d+)\s*$", re.IGNORECASE)
FLOAT_FMT = "%.17g"


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def parse_edge_list(text: str, n: int | None = None) -> Graph:
    edges = []
    declared = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = NODES_RE.match(line)
            if m:
                declared = int(m.group(1))
            continue
        line = line.split("#", 1)[0]
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphError(f"line {lineno}: expected 'i j [w]', got {raw!r}")
        try:
            edge = (int(parts[0]), int(parts[1])) + ((float(parts[2]),) if len(parts) == 3 else ())
        except ValueError as exc:
            raise GraphError(f"line {lineno}: {exc}") from exc
        edges.append(edge)
    if n is None:
        n = declared if declared is not None else 1 + max((max(e[0], e[1]) for e in edges), default=-1)
    return build_graph(edges, n)


def read_edge_list(path: str | Path, n: int | None = None) -> Graph:
    return parse_edge_list(Path(path).read_text(), n)


def format_edge_list(g: Graph) -> str:
    """Canonical text: node count header, then edges ``i < j`` in row-major order."""
    edges = g.edges()
    weighted = any(w != 1.0 for _, _, w in edges)
    lines = [f"# nodes {g.n}"]
    for i, j, w in edges:
        lines.append(f"{i} {j} {FLOAT_FMT % w}" if weighted else f"{i} {j}")
    return "\n".join(lines) + "\n"


def write_edge_list(path: str | Path, g: Graph) -> None:
    Path(path).write_text(format_edge_list(g))


def read_matrix(path: str | Path, header: bool = False, delimiter: str = ",") -> np.ndarray:
    """Read a 2-D float matrix; a single column comes back with shape ``(n, 1)``."""
    M = np.loadtxt(path, delimiter=delimiter, skiprows=1 if header else 0, ndmin=2, dtype=float)
    return M


def format_matrix(M, header: list[str] | None = None, delimiter: str = ",") -> str:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    lines = [] if header is None else [delimiter.join(header)]
    lines.extend(delimiter.join(FLOAT_FMT % v for v in row) for row in M)
    return "\n".join(lines) + "\n"


def write_matrix(path: str | Path, M, header: list[str] | None = None, delimiter: str = ",") -> None:
    Path(path).write_text(format_matrix(M, header, delimiter))


# -- framelet coefficients -------------------------------------------------------------

META_NAME = "meta.txt"


def channel_filename(c: Channel) -> str:
    return f"k{c[0]}_l{c[1]}.csv"


def write_coefficients(directory: str | Path, sys: FrameletSystem, Q: Coefficients) -> None:
    """One CSV per channel plus ``meta.txt`` with ``key=value`` lines."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = sys.metadata()
    meta["channels"] = " ".join(f"{k},{l}" for k, l in sys.index_set)
    (directory / META_NAME).write_text("".join(f"{k}={v}\n" for k, v in meta.items()))
    for c in sys.index_set:
        write_matrix(directory / channel_filename(c), Q[c])


def read_coefficients(directory: str | Path) -> tuple[dict[str, str], Coefficients]:
    directory = Path(directory)
    meta = {}
    for line in (directory / META_NAME).read_text().splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    channels = [tuple(int(v) for v in tok.split(",")) for tok in meta["channels"].split()]
    return meta, {c: read_matrix(directory / channel_filename(c)) for c in channels}


# -- solver state ---------------------------------------------------------------------

STATE_NAME = "state.npz"


def _chan(prefix: str, c: Channel) -> str:
    return f"{prefix}_k{c[0]}_l{c[1]}"


def save_state(path: str | Path, state) -> None:
    """Store a solver state (full, structure-only or framelet-only) as ``.npz``."""
    arrays = {"iter": np.array(state.iter)}
    if isinstance(state, DotState):
        arrays.update(kind=np.array("dot"), U=state.U, Z=state.Z, E=state.E, Y=state.Y,
                      lam1=state.lam1, lam3=state.lam3, lam4=state.lam4, mu=state.mu)
    else:
        arrays.update(kind=np.array("node"), U=state.U, mu=np.array([state.mu2]))
    for c, v in state.Q.items():
        arrays[_chan("Q", c)] = v
    for c, v in state.lam2.items():
        arrays[_chan("lam2", c)] = v
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_state(path: str | Path):
    with np.load(path) as data:
        arrays = {k: data[k] for k in data.files}
    Q, lam2 = {}, {}
    for key, v in arrays.items():
        m = re.fullmatch(r"(Q|lam2)_k(\d+)_l(\d+)", key)
        if m:
            (Q if m.group(1) == "Q" else lam2)[(int(m.group(2)), int(m.group(3)))] = v
    it = int(arrays["iter"])
    if str(arrays["kind"]) == "node":
        return NodeState(arrays["U"], Q, lam2, float(arrays["mu"][0]), it)
    return DotState(U=arrays["U"], Z=arrays["Z"], E=arrays["E"], Y=arrays["Y"], Q=Q,
                    lam1=arrays["lam1"], lam2=lam2, lam3=arrays["lam3"], lam4=arrays["lam4"],
                    mu=arrays["mu"], iter=it)
