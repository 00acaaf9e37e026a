"""Diluted square space-time lattice, Born-equivalent disorder sampling,
gauge transformations and vortex extraction.

Geometry conventions (all arrays 0-based):

* sites (x, y) with x in [0, L_x), y in [0, L_y)
* spatial bond (x, y) joins (x, y)-(x+1 mod L_x, y); for open x-boundary
  only x in [0, L_x-1), for periodic x in [0, L_x) (the wrap bond)
* temporal bond (x, y) joins (x, y)-(x, y+1), y in [0, L_y-1)

The y direction is always open (rows are processed sequentially by the
transfer matrix), matching the temporal-gauge-fixing sweep.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from .rng import RngTag, substream

__all__ = [
    "LatticeSpec",
    "DilutionMask",
    "DisorderRealization",
    "VortexConfig",
    "sample_dilution",
    "sample_signs_nishimori",
    "gauge_transform",
    "gauge_fix_temporal",
    "vortices",
]

UNCONSTRAINED = -1


@dataclass(frozen=True)
class LatticeSpec:
    """Space-time lattice geometry: L_x sites per row, L_y rows."""

    L_x: int
    L_y: int
    x_boundary: str = "periodic"  # "periodic" | "open"
    protocol: str = "cat"  # "cat" | "surface-code"

    def __post_init__(self):
        if self.L_x < 2:
            raise ValueError(f"L_x must be >= 2, got {self.L_x}")
        if self.L_y < 1:
            raise ValueError(f"L_y must be >= 1, got {self.L_y}")
        if self.x_boundary not in ("periodic", "open"):
            raise ValueError(f"unknown x_boundary {self.x_boundary!r}")
        if self.protocol not in ("cat", "surface-code"):
            raise ValueError(f"unknown protocol {self.protocol!r}")

    @property
    def n_spatial_per_row(self) -> int:
        return self.L_x if self.x_boundary == "periodic" else self.L_x - 1

    @property
    def n_sites(self) -> int:
        return self.L_x * self.L_y

    @property
    def n_bonds(self) -> int:
        return self.n_spatial_per_row * self.L_y + self.L_x * (self.L_y - 1)

    def spatial_shape(self):
        return (self.n_spatial_per_row, self.L_y)

    def temporal_shape(self):
        return (self.L_x, self.L_y - 1)


@dataclass
class DilutionMask:
    """Which bonds carry a measurement: True entries were measured."""

    spec: LatticeSpec
    spatial: np.ndarray  # bool, spatial_shape
    temporal: np.ndarray  # bool, temporal_shape

    def __post_init__(self):
        self.spatial = np.asarray(self.spatial, dtype=bool)
        self.temporal = np.asarray(self.temporal, dtype=bool)
        if self.spatial.shape != self.spec.spatial_shape():
            raise ValueError("spatial mask shape mismatch")
        if self.temporal.shape != self.spec.temporal_shape():
            raise ValueError("temporal mask shape mismatch")

    @property
    def n_measured(self) -> int:
        return int(self.spatial.sum() + self.temporal.sum())


@dataclass
class DisorderRealization:
    """Signs on measured bonds; unmeasured bonds carry sign 0 (= no sign)."""

    mask: DilutionMask
    spatial_sign: np.ndarray  # int8, +-1 on measured spatial bonds, 0 elsewhere
    temporal_sign: np.ndarray  # int8, +-1 on measured temporal bonds, 0 elsewhere
    rng_tag: RngTag | None = None
    # cumulative site flips relative to the physical (as-measured) frame;
    # None means the identity frame. Needed when later couplings (boundary
    # test spins) must be signed consistently with the bulk record.
    frame: np.ndarray | None = None

    def __post_init__(self):
        self.spatial_sign = np.asarray(self.spatial_sign, dtype=np.int8)
        self.temporal_sign = np.asarray(self.temporal_sign, dtype=np.int8)
        m = self.mask
        if self.spatial_sign.shape != m.spatial.shape:
            raise ValueError("spatial sign shape mismatch")
        if self.temporal_sign.shape != m.temporal.shape:
            raise ValueError("temporal sign shape mismatch")
        if np.any((self.spatial_sign == 0) & m.spatial) or np.any(
            (self.spatial_sign != 0) & ~m.spatial
        ):
            raise ValueError("spatial signs inconsistent with mask")
        if np.any((self.temporal_sign == 0) & m.temporal) or np.any(
            (self.temporal_sign != 0) & ~m.temporal
        ):
            raise ValueError("temporal signs inconsistent with mask")

    @property
    def spec(self) -> LatticeSpec:
        return self.mask.spec

    def copy(self) -> "DisorderRealization":
        return DisorderRealization(
            self.mask,
            self.spatial_sign.copy(),
            self.temporal_sign.copy(),
            self.rng_tag,
            None if self.frame is None else self.frame.copy(),
        )

    def frame_flips(self) -> np.ndarray:
        """Cumulative gauge flips as a dense (L_x, L_y) bool array."""
        if self.frame is None:
            return np.zeros((self.spec.L_x, self.spec.L_y), dtype=bool)
        return self.frame

    # -- serialization ----------------------------------------------------

    _MAGIC = b"NPRL"
    _BOUND = {"periodic": 0, "open": 1}
    _PROTO = {"cat": 0, "surface-code": 1}

    def to_binary(self, p_meas: float = float("nan"), t: float = float("nan")) -> bytes:
        """Compact record: header + packed mask/sign bitplanes."""
        spec = self.spec
        tag = self.rng_tag or RngTag(0, 0)
        buf = io.BytesIO()
        buf.write(self._MAGIC)
        buf.write(
            struct.pack(
                "<IIBBddqq",
                spec.L_x,
                spec.L_y,
                self._BOUND[spec.x_boundary],
                self._PROTO[spec.protocol],
                p_meas,
                t,
                tag.seed,
                tag.index,
            )
        )
        for plane in (
            self.mask.spatial,
            self.mask.temporal,
            self.spatial_sign > 0,
            self.temporal_sign > 0,
        ):
            buf.write(np.packbits(plane.astype(np.uint8).ravel()).tobytes())
        return buf.getvalue()

    @classmethod
    def from_binary(cls, blob: bytes) -> "DisorderRealization":
        if blob[:4] != cls._MAGIC:
            raise ValueError("bad magic in realization record")
        off = 4
        L_x, L_y, bnd, proto, p_meas, t, seed, index = struct.unpack_from(
            "<IIBBddqq", blob, off
        )
        off += struct.calcsize("<IIBBddqq")
        spec = LatticeSpec(
            L_x,
            L_y,
            {v: k for k, v in cls._BOUND.items()}[bnd],
            {v: k for k, v in cls._PROTO.items()}[proto],
        )

        def read_plane(shape):
            nonlocal off
            n = int(np.prod(shape))
            nbytes = (n + 7) // 8
            bits = np.unpackbits(
                np.frombuffer(blob, dtype=np.uint8, count=nbytes, offset=off)
            )[:n]
            off += nbytes
            return bits.astype(bool).reshape(shape)

        sp_mask = read_plane(spec.spatial_shape())
        tp_mask = read_plane(spec.temporal_shape())
        sp_pos = read_plane(spec.spatial_shape())
        tp_pos = read_plane(spec.temporal_shape())
        sp_sign = np.where(sp_mask, np.where(sp_pos, 1, -1), 0).astype(np.int8)
        tp_sign = np.where(tp_mask, np.where(tp_pos, 1, -1), 0).astype(np.int8)
        mask = DilutionMask(spec, sp_mask, tp_mask)
        return cls(mask, sp_sign, tp_sign, RngTag(seed, index))

    def to_text(self) -> str:
        """Debug dump, one bond per line: x y orientation measured sign."""
        lines = []
        for (kind, mask, sign) in (
            ("s", self.mask.spatial, self.spatial_sign),
            ("t", self.mask.temporal, self.temporal_sign),
        ):
            nx, ny = mask.shape
            for y in range(ny):
                for x in range(nx):
                    lines.append(
                        f"{x} {y} {kind} {int(mask[x, y])} {int(sign[x, y])}"
                    )
        return "\n".join(lines) + "\n"


@dataclass
class VortexConfig:
    """Frustration per elementary plaquette: 0/1, or -1 where unconstrained."""

    m: np.ndarray  # int8, plaquette grid

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=np.int8)

    def key(self) -> bytes:
        """Hashable identity for distribution bookkeeping."""
        return self.m.tobytes()

    def __eq__(self, other):
        return isinstance(other, VortexConfig) and np.array_equal(self.m, other.m)


# -- operations -----------------------------------------------------------


def sample_dilution(
    spec: LatticeSpec, p_meas: float, rng: np.random.Generator
) -> DilutionMask:
    """Each bond independently measured with probability p_meas."""
    if not 0.0 <= p_meas <= 1.0:
        raise ValueError(f"p_meas must lie in [0, 1], got {p_meas}")
    spatial = rng.random(spec.spatial_shape()) < p_meas
    temporal = rng.random(spec.temporal_shape()) < p_meas
    return DilutionMask(spec, spatial, temporal)


def sample_signs_nishimori(
    mask: DilutionMask, t: float, rng: np.random.Generator
) -> DisorderRealization:
    """Born-equivalent disorder: iid signs at P(+) = (1+sin 2t)/2, then a
    uniform gauge symmetrization (independent fair-coin site flips)."""
    if not 0.0 < t <= np.pi / 4:
        raise ValueError(f"t must lie in (0, pi/4], got {t}")
    p_plus = 0.5 * (1.0 + np.sin(2.0 * t))
    spec = mask.spec
    sp = np.where(rng.random(mask.spatial.shape) < p_plus, 1, -1).astype(np.int8)
    tp = np.where(rng.random(mask.temporal.shape) < p_plus, 1, -1).astype(np.int8)
    sp *= mask.spatial
    tp *= mask.temporal
    real = DisorderRealization(mask, sp, tp)
    flips = rng.random((spec.L_x, spec.L_y)) < 0.5
    return gauge_transform(real, flips)


def _bond_flip_parity(spec: LatticeSpec, flips: np.ndarray):
    """Per-bond parity of flipped endpoints (True where sign negates)."""
    flips = np.asarray(flips, dtype=bool)
    if flips.shape != (spec.L_x, spec.L_y):
        raise ValueError("flips must have shape (L_x, L_y)")
    n_sp = spec.n_spatial_per_row
    sp = flips[:n_sp, :] ^ np.roll(flips, -1, axis=0)[:n_sp, :]
    tp = flips[:, :-1] ^ flips[:, 1:]
    return sp, tp


def gauge_transform(real: DisorderRealization, flips: np.ndarray) -> DisorderRealization:
    """Negate every measured bond incident to an odd number of flipped sites."""
    sp_par, tp_par = _bond_flip_parity(real.spec, flips)
    sp = real.spatial_sign * np.where(sp_par, -1, 1).astype(np.int8)
    tp = real.temporal_sign * np.where(tp_par, -1, 1).astype(np.int8)
    frame = real.frame_flips() ^ np.asarray(flips, dtype=bool)
    return DisorderRealization(real.mask, sp, tp, real.rng_tag, frame)


def gauge_fix_temporal(real: DisorderRealization) -> DisorderRealization:
    """Deterministic bottom-up sweep making all measured temporal signs +1.

    tau[x, y] is the cumulative site flip of column x up to row y; a row's
    flip is chosen to cancel the sign of the measured temporal bond below it
    (unmeasured temporal bonds reset the chain, loop-free in open y).
    """
    spec = real.spec
    tau = np.ones((spec.L_x, spec.L_y), dtype=np.int8)
    for y in range(1, spec.L_y):
        below = np.where(
            real.mask.temporal[:, y - 1], real.temporal_sign[:, y - 1], 1
        ).astype(np.int8)
        tau[:, y] = tau[:, y - 1] * below
    return gauge_transform(real, tau < 0)


def vortices(real: DisorderRealization) -> VortexConfig:
    """Plaquette frustration; plaquettes touching unmeasured bonds are -1."""
    spec = real.spec
    n_px = spec.L_x if spec.x_boundary == "periodic" else spec.L_x - 1
    n_py = spec.L_y - 1
    m = np.empty((n_px, n_py), dtype=np.int8)
    sp = real.spatial_sign
    tp = real.temporal_sign
    for y in range(n_py):
        for x in range(n_px):
            signs = (
                int(sp[x, y]),
                int(sp[x, y + 1]),
                int(tp[x, y]),
                int(tp[(x + 1) % spec.L_x, y]),
            )
            if 0 in signs:
                m[x, y] = UNCONSTRAINED
            else:
                prod = signs[0] * signs[1] * signs[2] * signs[3]
                m[x, y] = (1 - prod) // 2
    return VortexConfig(m)


def sample_realization(
    spec: LatticeSpec, t: float, p_meas: float, tag: RngTag
) -> DisorderRealization:
    """Dilution + Nishimori signs from the tagged counter-based streams."""
    mask = sample_dilution(spec, p_meas, tag.stream("dilution"))
    real = sample_signs_nishimori(mask, t, tag.stream("signs"))
    real.rng_tag = tag
    return real
