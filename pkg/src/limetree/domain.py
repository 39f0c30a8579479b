"""Interpretable domains anchored to one explained instance.

An image domain maps binary vectors to occluded copies of the anchor image
(bit ``1`` preserves a segment, ``0`` paints it with the occlusion color);
a text domain maps binary vectors to the anchor token sequence with the
zero-bit tokens removed. The inverse mapping is total on {0,1}^d and
deterministic, which is what the fidelity guarantees rely on.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import UnsupportedInstanceError


@dataclass(frozen=True)
class Segmentation:
    """Per-pixel segment labels covering the full image."""

    labels: np.ndarray  # (height, width) int32, values 0..d-1
    d: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int32)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 2 or labels.size == 0:
            raise ValueError("labels must be a non-empty 2-D array")
        present = np.unique(labels)
        if present[0] < 0 or present[-1] >= self.d:
            raise ValueError("segment ids must lie in 0..d-1")
        if len(present) != self.d:
            missing = sorted(set(range(self.d)) - set(present.tolist()))
            raise ValueError("segment ids missing from mask: %s" % missing)

    @property
    def height(self):
        return self.labels.shape[0]

    @property
    def width(self):
        return self.labels.shape[1]


def build_grid_segmentation(width, height, rows, cols):
    """Regular rows x cols grid; remainder pixels join the last row/column."""
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be positive")
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    if rows > height or cols > width:
        raise ValueError("grid finer than the image")
    cell_h = height // rows
    cell_w = width // cols
    r_idx = np.minimum(np.arange(height) // cell_h, rows - 1)
    c_idx = np.minimum(np.arange(width) // cell_w, cols - 1)
    labels = (r_idx[:, None] * cols + c_idx[None, :]).astype(np.int32)
    return Segmentation(labels=labels, d=rows * cols)


def merge_segments(seg, groups):
    """Collapse each group of segment ids into one id.

    New ids are re-compacted to 0..d'-1 in ascending order of each merged
    group's smallest original member.
    """
    seen = set()
    for g in groups:
        g = set(g)
        for sid in g:
            if not (0 <= sid < seg.d):
                raise ValueError("unknown segment id %r" % (sid,))
            if sid in seen:
                raise ValueError("overlapping merge groups at id %r" % (sid,))
            seen.add(sid)
    grouped = [set(g) for g in groups if len(g) > 0]
    singles = [{i} for i in range(seg.d) if i not in seen]
    new_groups = sorted(grouped + singles, key=min)
    mapping = np.empty(seg.d, dtype=np.int32)
    for new_id, group in enumerate(new_groups):
        for old_id in group:
            mapping[old_id] = new_id
    return Segmentation(labels=mapping[seg.labels], d=len(new_groups))


@dataclass(frozen=True)
class OcclusionStrategy:
    """Fixed at domain construction; 'solid' paints a constant RGB color,
    'mean' paints each segment with its anchor mean color."""

    kind: str = "solid"
    rgb: tuple = (0, 0, 0)

    def __post_init__(self):
        if self.kind not in ("solid", "mean"):
            raise ValueError("occlusion kind must be 'solid' or 'mean'")
        object.__setattr__(self, "rgb", tuple(int(v) for v in self.rgb))


class InterpretableDomain:
    """Anchored bijection between {0,1}^d and occluded/reduced instances.

    Use :meth:`for_image` or :meth:`for_text` to construct. Immutable after
    construction; safe to share across threads.
    """

    def __init__(self, kind, d, anchor, segmentation=None, occlusion=None,
                 tokens=None, merge_history=None, injectivity_warning=False):
        self.kind = kind
        self.d = d
        self.anchor = anchor
        self.segmentation = segmentation
        self.occlusion = occlusion
        self.tokens = tokens
        self.merge_history = list(merge_history or [])
        self.injectivity_warning = injectivity_warning
        if kind == "image":
            self._fills = self._compute_fills()

    # -- construction -----------------------------------------------------

    @classmethod
    def for_image(cls, anchor, segmentation, occlusion=None, merge_history=None):
        anchor = np.asarray(anchor, dtype=np.uint8)
        if anchor.ndim != 3 or anchor.shape[2] != 3:
            raise ValueError("anchor image must be HxWx3 uint8")
        if anchor.shape[:2] != segmentation.labels.shape:
            raise ValueError("segmentation does not match image shape")
        occlusion = occlusion or OcclusionStrategy()
        dom = cls("image", segmentation.d, anchor, segmentation=segmentation,
                  occlusion=occlusion, merge_history=merge_history)
        dom.injectivity_warning = dom._check_injectivity()
        return dom

    @classmethod
    def for_text(cls, text, tokens=None, merge_history=None):
        if tokens is None:
            tokens = text.split() if isinstance(text, str) else list(text)
        tokens = tuple(tokens)
        if not tokens:
            raise ValueError("text anchor has no tokens")
        return cls("text", len(tokens), tokens, tokens=tokens,
                   merge_history=merge_history)

    def _compute_fills(self):
        """Per-segment RGB fill used when a bit is 0."""
        d = self.d
        fills = np.empty((d, 3), dtype=np.uint8)
        if self.occlusion.kind == "solid":
            fills[:] = np.array(self.occlusion.rgb, dtype=np.uint8)
        else:
            labels = self.segmentation.labels
            flat = self.anchor.reshape(-1, 3).astype(np.float64)
            lab = labels.ravel()
            for sid in range(d):
                fills[sid] = np.round(flat[lab == sid].mean(axis=0)).astype(np.uint8)
        return fills

    def _check_injectivity(self):
        """Warn when a segment of the anchor already equals its fill color,
        making the occluded and preserved renderings identical."""
        labels = self.segmentation.labels.ravel()
        flat = self.anchor.reshape(-1, 3)
        bad = []
        for sid in range(self.d):
            seg_pixels = flat[labels == sid]
            if np.all(seg_pixels == self._fills[sid]):
                bad.append(sid)
        if bad:
            warnings.warn(
                "segments %s equal their occlusion color; the interpretable "
                "mapping is not injective and fidelity guarantees are "
                "degraded" % bad,
                stacklevel=3,
            )
            return True
        return False

    # -- the mapping pair -------------------------------------------------

    def all_ones(self):
        return np.ones(self.d, dtype=np.uint8)

    def to_interpretable(self, instance):
        """The domain is anchored: only the anchor has a defined image."""
        if self.kind == "image":
            inst = np.asarray(instance, dtype=np.uint8)
            same = inst.shape == self.anchor.shape and np.array_equal(inst, self.anchor)
        else:
            same = tuple(instance) == self.anchor
        if not same:
            raise UnsupportedInstanceError(
                "instance differs from the domain anchor")
        return self.all_ones()

    def from_interpretable(self, point):
        point = np.asarray(point)
        if point.shape != (self.d,):
            raise ValueError("point length %d does not match d=%d"
                             % (point.size, self.d))
        if self.kind == "text":
            return tuple(t for t, b in zip(self.anchor, point) if b >= 0.5)
        out = self.anchor.copy()
        occluded = np.flatnonzero(point < 0.5)
        if occluded.size:
            labels = self.segmentation.labels
            for sid in occluded:
                out[labels == sid] = self._fills[sid]
        return out

    def decode_instance(self, instance):
        """Recover the binary point that produced ``instance``.

        For images each segment is compared against the anchor; for text the
        remaining tokens are matched greedily against the anchor sequence.
        Used by synthetic black boxes so they consume real occluded
        instances rather than shortcutting through bit vectors.
        """
        bits = np.ones(self.d, dtype=np.uint8)
        if self.kind == "image":
            inst = np.asarray(instance, dtype=np.uint8)
            labels = self.segmentation.labels
            for sid in range(self.d):
                mask = labels == sid
                if not np.array_equal(inst[mask], self.anchor[mask]):
                    bits[sid] = 0
            return bits
        remaining = list(instance)
        pos = 0
        for i, tok in enumerate(self.anchor):
            if pos < len(remaining) and remaining[pos] == tok:
                pos += 1
            else:
                bits[i] = 0
        if pos != len(remaining):
            raise ValueError("instance is not a subsequence of the anchor")
        return bits

    # -- serialization ----------------------------------------------------

    def to_json(self):
        doc = {"kind": self.kind, "d": self.d, "merge_history": self.merge_history}
        if self.kind == "image":
            doc["occlusion"] = {"kind": self.occlusion.kind,
                                "rgb": list(self.occlusion.rgb)}
            doc["injectivity_warning"] = self.injectivity_warning
        else:
            doc["tokens"] = list(self.anchor)
        return doc


def load_mask(path_or_image):
    """Read a single-channel label image (PNG/PGM) into a Segmentation."""
    img = path_or_image if isinstance(path_or_image, Image.Image) else Image.open(path_or_image)
    if img.mode not in ("L", "I", "I;16", "P"):
        img = img.convert("I")
    labels = np.asarray(img, dtype=np.int32)
    d = int(labels.max()) + 1
    return Segmentation(labels=labels, d=d)


def load_image(path_or_image):
    """Read an 8-bit RGB anchor image (PNG/PPM)."""
    img = path_or_image if isinstance(path_or_image, Image.Image) else Image.open(path_or_image)
    return np.asarray(img.convert("RGB"), dtype=np.uint8)


def save_png(array, path):
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(path, format="PNG")


def domain_to_json_str(domain):
    return json.dumps(domain.to_json(), sort_keys=True)
