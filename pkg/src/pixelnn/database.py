"""Immutable exemplar database: (regressed, target) pairs plus descriptors.

Descriptor fields are stored, not recomputed at query time; search is the
hot path and the ~w*h*dim*4 bytes per exemplar is a deliberate trade.
Databases persist bit-exactly in the PXNN binary format and can be subset
on the fly (by id, tag, or name) for controllable synthesis; subsets share
pixel data with the parent and keep the original ids.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .descriptor import (
    DescriptorConfig,
    DescriptorField,
    GlobalDescriptor,
    compute_field,
    global_descriptor,
)
from .image import ImageRGB, LowFreqImage

DB_MAGIC = b"PXNN"
DB_VERSION = 1
_EXTERNAL_SENTINEL = 0xFFFFFFFF


@dataclass(frozen=True)
class Exemplar:
    """One training pair with its match keys."""

    id: int
    name: str
    regressed: LowFreqImage
    target: ImageRGB
    field: DescriptorField
    global_desc: GlobalDescriptor
    tags: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "tags", frozenset(self.tags))
        shapes = {
            self.regressed.data.shape[:2],
            self.target.data.shape[:2],
            self.field.data.shape[:2],
        }
        if len(shapes) != 1:
            raise ValueError(
                f"exemplar {self.id} ({self.name!r}): regressed/target/field "
                f"dimensions disagree: {sorted(shapes)}"
            )


@dataclass(frozen=True)
class ExemplarDatabase:
    """Ordered, immutable set of exemplars sharing one descriptor config.

    descriptor_config is None for databases built from external fields.
    """

    exemplars: tuple[Exemplar, ...]
    descriptor_config: DescriptorConfig | None

    def __post_init__(self):
        object.__setattr__(self, "exemplars", tuple(self.exemplars))
        if not self.exemplars:
            raise ValueError("database must contain at least one exemplar")
        ids = [e.id for e in self.exemplars]
        if len(set(ids)) != len(ids) or ids != sorted(ids):
            raise ValueError(f"exemplar ids must be unique and ascending, got {ids}")
        sizes = {e.target.data.shape[:2] for e in self.exemplars}
        if len(sizes) != 1:
            raise ValueError(f"exemplars must share one image size, got {sorted(sizes)}")
        hashes = {e.field.config_hash for e in self.exemplars}
        if len(hashes) != 1:
            raise ValueError(f"exemplars mix descriptor configs: {sorted(hashes)}")
        if self.descriptor_config is not None:
            expected = self.descriptor_config.digest()
            if hashes != {expected}:
                raise ValueError(
                    f"fields hashed {hashes.pop()} but config digests {expected}"
                )

    @property
    def count(self) -> int:
        return len(self.exemplars)

    @property
    def image_size(self) -> tuple[int, int]:
        """(width, height) shared by every exemplar."""
        h, w = self.exemplars[0].target.data.shape[:2]
        return w, h

    @property
    def descriptor_dim(self) -> int:
        return self.exemplars[0].field.dim

    @property
    def config_hash(self) -> str:
        return self.exemplars[0].field.config_hash

    def get(self, exemplar_id: int) -> Exemplar:
        for e in self.exemplars:
            if e.id == exemplar_id:
                return e
        raise KeyError(f"no exemplar with id {exemplar_id}")


def build_database(
    pairs: Sequence[tuple[ImageRGB, ImageRGB, str, Iterable[str]]],
    cfg: DescriptorConfig,
) -> ExemplarDatabase:
    """Build a database from (regressed, target, name, tags) tuples.

    Ids are assigned 0..N-1 in input order; descriptor fields and global
    descriptors are computed from the regressed images, which are the match
    keys at query time.
    """
    if not pairs:
        raise ValueError("cannot build a database from zero pairs")
    base_shape = pairs[0][0].data.shape[:2]
    exemplars = []
    for idx, (regressed, target, name, tags) in enumerate(pairs):
        if regressed.data.shape[:2] != base_shape or target.data.shape[:2] != base_shape:
            raise ValueError(
                f"pair {idx} ({name!r}) has size "
                f"{regressed.data.shape[1]}x{regressed.data.shape[0]} / "
                f"{target.data.shape[1]}x{target.data.shape[0]}, expected "
                f"{base_shape[1]}x{base_shape[0]}"
            )
        if not isinstance(regressed, LowFreqImage):
            regressed = LowFreqImage(regressed.data, provenance="external-file")
        field = compute_field(regressed, cfg)
        exemplars.append(
            Exemplar(
                id=idx,
                name=name,
                regressed=regressed,
                target=target,
                field=field,
                global_desc=global_descriptor(field),
                tags=frozenset(tags),
            )
        )
    return ExemplarDatabase(tuple(exemplars), cfg)


def database_from_fields(
    entries: Sequence[tuple[ImageRGB, ImageRGB, str, Iterable[str], DescriptorField]],
) -> ExemplarDatabase:
    """Assemble a database from precomputed (external) descriptor fields."""
    if not entries:
        raise ValueError("cannot build a database from zero entries")
    exemplars = []
    for idx, (regressed, target, name, tags, field) in enumerate(entries):
        if not isinstance(regressed, LowFreqImage):
            regressed = LowFreqImage(regressed.data, provenance="external-file")
        exemplars.append(
            Exemplar(
                id=idx,
                name=name,
                regressed=regressed,
                target=target,
                field=field,
                global_desc=global_descriptor(field),
                tags=frozenset(tags),
            )
        )
    return ExemplarDatabase(tuple(exemplars), None)


def subset(
    db: ExemplarDatabase,
    ids: Iterable[int] | None = None,
    tags: Iterable[str] | None = None,
    names: Iterable[str] | None = None,
) -> ExemplarDatabase:
    """Restrict the database, sharing exemplar data with the parent.

    Selectors combine with AND; a tag selector keeps exemplars carrying any
    of the given tags. Ids and order are preserved so correspondence maps
    stay stable under pruning. An empty selection is an error: synthesis
    needs at least one exemplar.
    """
    keep = list(db.exemplars)
    if ids is not None:
        wanted = set(int(i) for i in ids)
        keep = [e for e in keep if e.id in wanted]
    if tags is not None:
        wanted_tags = set(tags)
        keep = [e for e in keep if e.tags & wanted_tags]
    if names is not None:
        wanted_names = set(names)
        keep = [e for e in keep if e.name in wanted_names]
    if not keep:
        raise ValueError("empty exemplar selection")
    return ExemplarDatabase(tuple(keep), db.descriptor_config)


class _Reader:
    """Cursor over a byte blob that reports truncation by offset."""

    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise ValueError(f"truncated at byte {len(self.blob)} (needed {self.pos + n})")
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u8(self) -> int:
        return self.take(1)[0]

    def f32_array(self, count: int, shape: tuple[int, ...]) -> np.ndarray:
        raw = self.take(count * 4)
        return np.frombuffer(raw, dtype="<f4").reshape(shape)


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValueError(f"string too long to serialize ({len(raw)} bytes)")
    return struct.pack("<H", len(raw)) + raw


def save_database(db: ExemplarDatabase, path) -> None:
    """Write the database in the PXNN binary format (bit-exact floats)."""
    w, h = db.image_size
    dim = db.descriptor_dim
    out = [DB_MAGIC, struct.pack("<5I", DB_VERSION, db.count, w, h, dim)]
    cfg = db.descriptor_config
    if cfg is not None:
        out.append(struct.pack("<2I", cfg.levels, cfg.patch_radius))
        out.append(np.asarray(cfg.weights, dtype="<f4").tobytes())
        out.append(struct.pack("<B", int(cfg.normalize_per_level)))
    else:
        # External fields: record the shared level structure so the global
        # descriptor length stays recoverable.
        level_dims = db.exemplars[0].field.level_dims or (dim,)
        out.append(struct.pack("<2I", _EXTERNAL_SENTINEL, len(level_dims)))
        out.append(struct.pack(f"<{len(level_dims)}I", *level_dims))
    for e in db.exemplars:
        out.append(struct.pack("<I", e.id))
        out.append(_pack_str(e.name))
        sorted_tags = sorted(e.tags)
        out.append(struct.pack("<H", len(sorted_tags)))
        for tag in sorted_tags:
            out.append(_pack_str(tag))
        out.append(e.target.data.astype("<f4").tobytes())
        out.append(e.regressed.data.astype("<f4").tobytes())
        out.append(e.field.data.astype("<f4").tobytes())
        out.append(e.global_desc.data.astype("<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(out))


def load_database(path) -> ExemplarDatabase:
    """Load a PXNN database file written by save_database."""
    with open(path, "rb") as fh:
        blob = fh.read()
    rd = _Reader(blob)
    magic = rd.take(4)
    if magic != DB_MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {DB_MAGIC!r}")
    version = rd.u32()
    if version != DB_VERSION:
        raise ValueError(f"unsupported database version {version}")
    count, w, h, dim = rd.u32(), rd.u32(), rd.u32(), rd.u32()

    levels = rd.u32()
    if levels == _EXTERNAL_SENTINEL:
        cfg = None
        level_count = rd.u32()
        level_dims = tuple(struct.unpack(f"<{level_count}I", rd.take(4 * level_count)))
        config_hash = "external"
        global_dim = level_dims[-1]
    else:
        patch_radius = rd.u32()
        weights = tuple(
            float(x) for x in np.frombuffer(rd.take(4 * levels), dtype="<f4")
        )
        normalize = bool(rd.u8())
        cfg = DescriptorConfig(
            levels=levels,
            patch_radius=patch_radius,
            level_weights=weights,
            normalize_per_level=normalize,
        )
        if cfg.dim != dim:
            raise ValueError(f"config implies dim {cfg.dim} but header says {dim}")
        level_dims = (cfg.block_dim,) * levels
        config_hash = cfg.digest()
        global_dim = cfg.block_dim

    exemplars = []
    seen_ids = set()
    for _ in range(count):
        ex_id = rd.u32()
        if ex_id in seen_ids:
            raise ValueError(f"duplicate exemplar id {ex_id}")
        seen_ids.add(ex_id)
        name = rd.take(rd.u16()).decode("utf-8")
        tag_count = rd.u16()
        tags = frozenset(rd.take(rd.u16()).decode("utf-8") for _ in range(tag_count))
        target = ImageRGB(rd.f32_array(w * h * 3, (h, w, 3)))
        regressed = LowFreqImage(
            rd.f32_array(w * h * 3, (h, w, 3)), provenance="external-file"
        )
        field = DescriptorField(
            rd.f32_array(w * h * dim, (h, w, dim)),
            config_hash=config_hash,
            level_dims=level_dims,
        )
        gdesc = GlobalDescriptor(rd.f32_array(global_dim, (global_dim,)))
        exemplars.append(
            Exemplar(
                id=ex_id,
                name=name,
                regressed=regressed,
                target=target,
                field=field,
                global_desc=gdesc,
                tags=tags,
            )
        )
    if rd.pos != len(blob):
        raise ValueError(f"trailing garbage after byte {rd.pos}")
    return ExemplarDatabase(tuple(exemplars), cfg)
