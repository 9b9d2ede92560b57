"""Compute compression formats (CCFs) and compressed matrix storage.

A CCF tags each dimension of a matrix operand as Uncompressed or Compressed
and fixes the traversal (mode) order. CSR of an M x K operand is ``UMCK``:
the M dimension is uncompressed and row-major, the K coordinates of the
nonzeros are compressed. CSC of the same operand is ``UKCM`` -- the same
format compressed along the other mode orientation. The outer mode is always
uncompressed here; doubly-compressed layouts are out of scope.

Compressed payloads use the pos/crd/values triple: ``pos`` holds the start
offset of each outer slice (length outer extent + 1), ``crd`` the inner
coordinates of the nonzeros, ``values`` the nonzero values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VALUE_DTYPE = np.float64
INDEX_DTYPE = np.int64

DIMS = ("M", "K", "N")

# (row dimension, column dimension) for each dimension pair a matrix can carry
_ROLE_AXES = {
    frozenset(("M", "K")): ("M", "K"),  # left operand
    frozenset(("K", "N")): ("K", "N"),  # right operand
    frozenset(("M", "N")): ("M", "N"),  # output
}


class FormatError(ValueError):
    """Malformed CCF tag or invariant-violating matrix payload."""


@dataclass(frozen=True)
class CcfDescriptor:
    """Per-dimension mode designation plus mode (major-dimension) order."""

    outer_dim: str
    outer_mode: str
    inner_dim: str
    inner_mode: str

    def __post_init__(self):
        if self.outer_dim not in DIMS or self.inner_dim not in DIMS:
            raise FormatError(f"unknown dimension in {self.tag!r}")
        if self.outer_dim == self.inner_dim:
            raise FormatError(f"repeated dimension in {self.tag!r}")
        if self.outer_mode != "U":
            raise FormatError(f"outer mode must be uncompressed: {self.tag!r}")
        if self.inner_mode not in ("U", "C"):
            raise FormatError(f"bad inner mode in {self.tag!r}")
        if frozenset((self.outer_dim, self.inner_dim)) not in _ROLE_AXES:
            raise FormatError(f"unsupported dimension pair in {self.tag!r}")

    @property
    def tag(self) -> str:
        return f"{self.outer_mode}{self.outer_dim}{self.inner_mode}{self.inner_dim}"

    @property
    def dims(self) -> frozenset:
        return frozenset((self.outer_dim, self.inner_dim))

    @property
    def compressed(self) -> bool:
        return self.inner_mode == "C"

    @property
    def row_dim(self) -> str:
        return _ROLE_AXES[self.dims][0]

    @property
    def col_dim(self) -> str:
        return _ROLE_AXES[self.dims][1]

    @property
    def row_major(self) -> bool:
        """True when the outer (major) dimension indexes rows."""
        return self.outer_dim == self.row_dim

    def __repr__(self):
        return f"CcfDescriptor({self.tag!r})"


def parse_ccf(tag: str) -> CcfDescriptor:
    """Parse a 4-character tag such as ``UMCK`` into a descriptor.

    Raises FormatError for malformed tags, a compressed outer mode, or a
    repeated dimension.
    """
    if not isinstance(tag, str) or len(tag) != 4:
        raise FormatError(f"CCF tag must be 4 characters: {tag!r}")
    outer_mode, outer_dim, inner_mode, inner_dim = tag[0], tag[1], tag[2], tag[3]
    if outer_mode not in ("U", "C") or inner_mode not in ("U", "C"):
        raise FormatError(f"mode letters must be U or C: {tag!r}")
    if outer_mode == "C":
        raise FormatError(f"compressed outer mode is not supported: {tag!r}")
    return CcfDescriptor(outer_dim, outer_mode, inner_dim, inner_mode)


def dense_ccf(dims: frozenset) -> CcfDescriptor:
    """Canonical fully-uncompressed descriptor (row-major) for a dim pair."""
    row, col = _ROLE_AXES[frozenset(dims)]
    return CcfDescriptor(row, "U", col, "U")


# Canonical operand descriptors.
DENSE_A = parse_ccf("UMUK")
DENSE_B = parse_ccf("UKUN")
DENSE_OUT = parse_ccf("UMUN")
CSR_A = parse_ccf("UMCK")
CSC_A = parse_ccf("UKCM")
CSC_B = parse_ccf("UNCK")
CSR_B = parse_ccf("UKCN")


def _own_readonly(arr, dtype) -> np.ndarray:
    """Contiguous read-only copy-on-demand; never mutates the caller's array."""
    converted = np.ascontiguousarray(np.asarray(arr, dtype=dtype))
    if converted.flags.writeable and np.shares_memory(converted, arr):
        converted = converted.copy()
    converted.setflags(write=False)
    return converted


@dataclass(frozen=True, eq=False)
class StoredMatrix:
    """One matrix in dense or compressed (pos/crd/values) layout.

    ``rows``/``cols`` are always the logical matrix shape regardless of the
    mode orientation; the ccf decides whether pos runs over rows or columns.
    Instances are immutable (arrays are marked read-only) and validated on
    construction.
    """

    rows: int
    cols: int
    ccf: CcfDescriptor
    dense: np.ndarray | None = None
    pos: np.ndarray | None = None
    crd: np.ndarray | None = None
    values: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise FormatError("matrix extents must be positive")
        if self.ccf.compressed:
            self._validate_compressed()
        else:
            self._validate_dense()

    def _validate_dense(self):
        if self.dense is None or self.pos is not None or self.crd is not None:
            raise FormatError("dense matrix must carry exactly a value grid")
        grid = _own_readonly(self.dense, VALUE_DTYPE)
        if grid.shape != (self.rows, self.cols):
            raise FormatError(
                f"dense payload shape {grid.shape} != ({self.rows}, {self.cols})"
            )
        object.__setattr__(self, "dense", grid)

    def _validate_compressed(self):
        if self.dense is not None or self.pos is None or self.crd is None or self.values is None:
            raise FormatError("compressed matrix must carry pos/crd/values")
        pos = _own_readonly(self.pos, INDEX_DTYPE)
        crd = _own_readonly(self.crd, INDEX_DTYPE)
        values = _own_readonly(self.values, VALUE_DTYPE)
        outer = self.outer_extent
        inner = self.inner_extent
        if pos.ndim != 1 or pos.shape[0] != outer + 1:
            raise FormatError(f"pos must have length outer extent + 1 = {outer + 1}")
        if pos[0] != 0 or pos[-1] != crd.shape[0] or crd.shape[0] != values.shape[0]:
            raise FormatError("pos[0] = 0, pos[-1] = nnz, and |crd| = |values| required")
        if np.any(np.diff(pos) < 0):
            raise FormatError("pos must be non-decreasing")
        if crd.size:
            if crd.min() < 0 or crd.max() >= inner:
                raise FormatError("crd entry out of range")
            # strict increase within each outer slice
            slice_id = np.repeat(np.arange(outer), np.diff(pos))
            same = slice_id[1:] == slice_id[:-1]
            if np.any(np.diff(crd)[same] <= 0):
                raise FormatError("crd must strictly increase within each slice")
        object.__setattr__(self, "pos", pos)
        object.__setattr__(self, "crd", crd)
        object.__setattr__(self, "values", values)

    @property
    def is_dense(self) -> bool:
        return not self.ccf.compressed

    @property
    def outer_extent(self) -> int:
        return self.rows if self.ccf.outer_dim == self.ccf.row_dim else self.cols

    @property
    def inner_extent(self) -> int:
        return self.cols if self.ccf.outer_dim == self.ccf.row_dim else self.rows

    @property
    def nnz(self) -> int:
        if self.is_dense:
            return int(np.count_nonzero(self.dense))
        return int(self.values.shape[0])

    @property
    def density(self) -> float:
        return self.nnz / (self.rows * self.cols)

    def __repr__(self):
        kind = "dense" if self.is_dense else f"nnz={self.nnz}"
        return f"StoredMatrix({self.rows}x{self.cols}, {self.ccf.tag}, {kind})"


def dense_matrix(grid, ccf: CcfDescriptor | None = None) -> StoredMatrix:
    """Wrap a 2-D value grid as an uncompressed StoredMatrix."""
    grid = np.asarray(grid, dtype=VALUE_DTYPE)
    if grid.ndim != 2:
        raise FormatError("value grid must be 2-D")
    if ccf is None:
        ccf = DENSE_A
    if ccf.compressed:
        raise FormatError("dense_matrix requires an uncompressed descriptor")
    return StoredMatrix(grid.shape[0], grid.shape[1], ccf, dense=grid)


def compress(m: StoredMatrix, target: CcfDescriptor) -> StoredMatrix:
    """Compress a dense matrix into the target mode orientation.

    With an uncompressed target this just re-tags the grid to the target
    orientation. Stored zeros are never emitted.
    """
    if not m.is_dense:
        raise FormatError("compress expects a dense input; use convert instead")
    if target.dims != m.ccf.dims:
        raise FormatError(
            f"target dims {target.tag!r} do not match matrix role {m.ccf.tag!r}"
        )
    if not target.compressed:
        return StoredMatrix(m.rows, m.cols, target, dense=m.dense)
    grid = m.dense if target.row_major else m.dense.T
    outer = grid.shape[0]
    out_idx, in_idx = np.nonzero(grid)  # row-major order: sorted by slice, then crd
    pos = np.zeros(outer + 1, dtype=INDEX_DTYPE)
    np.cumsum(np.bincount(out_idx, minlength=outer), out=pos[1:])
    return StoredMatrix(
        m.rows,
        m.cols,
        target,
        pos=pos,
        crd=in_idx.astype(INDEX_DTYPE),
        values=grid[out_idx, in_idx],
    )


def decompress(m: StoredMatrix) -> StoredMatrix:
    """Expand any stored matrix to the canonical dense row-major layout."""
    canonical = dense_ccf(m.ccf.dims)
    if m.is_dense:
        return StoredMatrix(m.rows, m.cols, canonical, dense=m.dense)
    outer = m.outer_extent
    grid = np.zeros((outer, m.inner_extent), dtype=VALUE_DTYPE)
    slice_id = np.repeat(np.arange(outer), np.diff(m.pos))
    grid[slice_id, m.crd] = m.values
    if not m.ccf.row_major:
        grid = np.ascontiguousarray(grid.T)
    return StoredMatrix(m.rows, m.cols, canonical, dense=grid)


def convert(m: StoredMatrix, target: CcfDescriptor) -> StoredMatrix:
    """Re-lay a matrix out under a new CCF, preserving its logical values."""
    if target.dims != m.ccf.dims:
        raise FormatError(
            f"target dims {target.tag!r} do not match matrix role {m.ccf.tag!r}"
        )
    return compress(decompress(m), target)


def prune_explicit_zeros(m: StoredMatrix) -> StoredMatrix:
    """Drop explicitly stored zero values (possible in ingested files)."""
    if m.is_dense or not np.any(m.values == 0):
        return m
    keep = m.values != 0
    outer = m.outer_extent
    slice_id = np.repeat(np.arange(outer), np.diff(m.pos))[keep]
    pos = np.zeros(outer + 1, dtype=INDEX_DTYPE)
    np.cumsum(np.bincount(slice_id, minlength=outer), out=pos[1:])
    return StoredMatrix(
        m.rows, m.cols, m.ccf, pos=pos, crd=m.crd[keep], values=m.values[keep]
    )


def gen_uniform_random(
    rows: int,
    cols: int,
    density: float,
    seed: int,
    ccf: CcfDescriptor | None = None,
) -> StoredMatrix:
    """Dense matrix whose cells are independently nonzero with p = density.

    Nonzero values are integers drawn uniformly from [1, 9] so that exact
    equality checks against reference products stay free of round-off.
    Pure function of its arguments.
    """
    if not 0.0 < density <= 1.0:
        raise FormatError(f"density must be in (0, 1]: {density}")
    rng = np.random.default_rng(seed)
    mask = rng.random((rows, cols)) < density
    grid = rng.integers(1, 10, size=(rows, cols)).astype(VALUE_DTYPE)
    grid *= mask
    return dense_matrix(grid, ccf)


def storage_bytes(m: StoredMatrix, value_bytes: int = 4, index_bytes: int = 4) -> int:
    """Footprint of the stored payload.

    Dense: rows*cols*value_bytes. Compressed: one value and one coordinate
    per nonzero plus the pos array.
    """
    if value_bytes < 1 or index_bytes < 1:
        raise FormatError("byte widths must be positive")
    if m.is_dense:
        return m.rows * m.cols * value_bytes
    nnz = m.nnz
    return nnz * (value_bytes + index_bytes) + (m.outer_extent + 1) * index_bytes


# ---------------------------------------------------------------------------
# MatrixMarket coordinate format


def read_mtx(path) -> StoredMatrix:
    """Read a MatrixMarket coordinate file into a UMCK (CSR) matrix.

    Accepts real/integer general coordinate files with 1-based indices.
    Duplicate coordinates and out-of-range indices are rejected. Explicitly
    stored zeros are preserved; run prune_explicit_zeros to drop them.
    """
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if (
            len(header) < 4
            or header[0] != "%%MatrixMarket"
            or header[1].lower() != "matrix"
            or header[2].lower() != "coordinate"
        ):
            raise FormatError(f"not a MatrixMarket coordinate file: {path}")
        qualifiers = [q.lower() for q in header[3:]]
        if qualifiers and qualifiers[0] not in ("real", "integer"):
            raise FormatError(f"unsupported value type {qualifiers[0]!r}")
        if len(qualifiers) > 1 and qualifiers[1] != "general":
            raise FormatError(f"unsupported symmetry {qualifiers[1]!r}")
        size_line = None
        entries = []
        for line in fh:
            line = line.strip()
            if not line or line.startswith("%"):
                continue
            if size_line is None:
                size_line = line.split()
                continue
            entries.append(line.split())
    if size_line is None or len(size_line) != 3:
        raise FormatError("missing or malformed size line")
    rows, cols, nnz = (int(x) for x in size_line)
    if len(entries) != nnz:
        raise FormatError(f"expected {nnz} entries, found {len(entries)}")
    grid = np.zeros((rows, cols), dtype=VALUE_DTYPE)
    seen = np.zeros((rows, cols), dtype=bool)
    explicit_zero = []
    for item in entries:
        if len(item) != 3:
            raise FormatError(f"malformed entry line: {' '.join(item)!r}")
        i, j, v = int(item[0]) - 1, int(item[1]) - 1, float(item[2])
        if not (0 <= i < rows and 0 <= j < cols):
            raise FormatError(f"index ({i + 1}, {j + 1}) outside {rows}x{cols}")
        if seen[i, j]:
            raise FormatError(f"duplicate coordinate ({i + 1}, {j + 1})")
        seen[i, j] = True
        grid[i, j] = v
        if v == 0:
            explicit_zero.append((i, j))
    m = compress(dense_matrix(grid, DENSE_A), CSR_A)
    if explicit_zero:
        # re-insert stored zeros so the file payload round-trips
        outer = m.outer_extent
        slice_id = np.repeat(np.arange(outer), np.diff(m.pos))
        coords = {(int(r), int(c)) for r, c in zip(slice_id, m.crd)}
        coords.update(explicit_zero)
        rows_idx, cols_idx = zip(*sorted(coords))
        rows_idx = np.asarray(rows_idx)
        cols_idx = np.asarray(cols_idx)
        pos = np.zeros(rows + 1, dtype=INDEX_DTYPE)
        np.cumsum(np.bincount(rows_idx, minlength=rows), out=pos[1:])
        m = StoredMatrix(
            rows,
            cols,
            CSR_A,
            pos=pos,
            crd=cols_idx.astype(INDEX_DTYPE),
            values=grid[rows_idx, cols_idx],
        )
    return m


def write_mtx(path, m: StoredMatrix) -> None:
    """Write a matrix as a MatrixMarket real general coordinate file."""
    comp = m if not m.is_dense else compress(m, CcfDescriptor(m.ccf.row_dim, "U", m.ccf.col_dim, "C"))
    outer = comp.outer_extent
    slice_id = np.repeat(np.arange(outer), np.diff(comp.pos))
    if comp.ccf.row_major:
        rows_idx, cols_idx = slice_id, comp.crd
    else:
        rows_idx, cols_idx = comp.crd, slice_id
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{comp.rows} {comp.cols} {comp.nnz}\n")
        for i, j, v in zip(rows_idx, cols_idx, comp.values):
            fh.write(f"{int(i) + 1} {int(j) + 1} {float(v)!r}\n")
