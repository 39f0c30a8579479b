"""Batch probabilistic predictors: synthetic families, explicit tables and
a remote HTTP client.

Synthetic black boxes operate on real instances (occluded images, reduced
token sequences): they decode which segments are present through the
domain before looking up probabilities, so they exercise the same inverse
mapping path a deployed image model would.
"""

import base64
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import requests

from .errors import ProtocolError, TransportError

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str  # 'segment-logit' | 'boolean-table' | 'xor-pair'
    d: int
    class_count: int
    seed: int

    def __post_init__(self):
        if self.kind not in ("segment-logit", "boolean-table", "xor-pair"):
            raise ValueError("unknown synthetic kind %r" % (self.kind,))
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.class_count < 2:
            raise ValueError("class_count must be >= 2")
        if self.kind == "xor-pair" and self.d < 2:
            raise ValueError("xor-pair needs d >= 2")


class BlackBox:
    """Base binding: subclasses implement predict_bits(bits_matrix)."""

    def __init__(self, class_count, class_names=None, domain=None):
        self.class_count = class_count
        self.class_names = class_names
        self.domain = domain

    def bind_domain(self, domain):
        """Return a copy bound to a domain for instance decoding."""
        import copy

        bb = copy.copy(self)
        bb.domain = domain
        return bb

    def _decode(self, instances):
        if self.domain is not None:
            return np.array([self.domain.decode_instance(x) for x in instances],
                            dtype=np.float64)
        return np.array([np.asarray(x, dtype=np.float64) for x in instances])

    def predict_batch(self, instances):
        if len(instances) == 0:
            raise ValueError("empty batch")
        rows = self.predict_bits(self._decode(instances))
        _check_rows(rows, self.class_count)
        return rows

    def predict_bits(self, bits):
        raise NotImplementedError


def _check_rows(rows, class_count):
    if rows.ndim != 2 or rows.shape[1] != class_count:
        raise ProtocolError("probability rows have wrong width")
    if np.any(rows < 0) or np.any(rows > 1):
        raise ProtocolError("probabilities outside [0, 1]")
    if np.any(np.abs(rows.sum(axis=1) - 1.0) > ROW_SUM_TOL):
        raise ProtocolError("probability rows do not sum to 1")


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class SyntheticBlackBox(BlackBox):
    def __init__(self, spec, domain=None):
        super().__init__(spec.class_count, domain=domain)
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        k, d = spec.class_count, spec.d
        if spec.kind == "segment-logit":
            self._weights = rng.normal(0.0, 2.0, size=(k, d))
            self._pair = rng.normal(0.0, 1.0, size=(k, d, d))
            self._pair = np.triu(self._pair, 1)
            self._bias = rng.normal(0.0, 1.0, size=k)
        elif spec.kind == "boolean-table":
            raw = rng.random((2 ** d, k)) + 1e-6
            self._table = raw / raw.sum(axis=1, keepdims=True)
        # xor-pair is parameter-free: class-0 logit 12*(x0 xor x1), class-1
        # logit 6, any further classes pinned far below.

    def predict_bits(self, bits):
        bits = np.asarray(bits, dtype=np.float64)
        k, d = self.spec.class_count, self.spec.d
        if bits.shape[1] != d:
            raise ValueError("bit rows of length %d, expected %d" % (bits.shape[1], d))
        if self.spec.kind == "segment-logit":
            # computed row by row so the output is bit-identical regardless
            # of how callers batch their queries (the exactness guarantees
            # compare probabilities across different batch shapes)
            logits = np.empty((bits.shape[0], k))
            for n, x in enumerate(bits):
                for c in range(k):
                    logits[n, c] = (float(x @ self._weights[c])
                                    + float(x @ self._pair[c] @ x)
                                    + self._bias[c])
            return _softmax(logits)
        if self.spec.kind == "boolean-table":
            idx = (bits >= 0.5).astype(np.int64) @ (1 << np.arange(d - 1, -1, -1))
            return self._table[idx]
        x = (bits[:, 0] >= 0.5).astype(np.float64)
        y = (bits[:, 1] >= 0.5).astype(np.float64)
        xor = np.abs(x - y)
        logits = np.full((bits.shape[0], k), -20.0)
        logits[:, 0] = 12.0 * xor
        logits[:, 1] = 6.0
        return _softmax(logits)


def make_synthetic(spec, domain=None):
    return SyntheticBlackBox(spec, domain=domain)


class TableBlackBox(BlackBox):
    """Explicit probability table over {0,1}^d, row order = ascending binary."""

    def __init__(self, rows, domain=None):
        rows = np.asarray(rows, dtype=np.float64)
        n, k = rows.shape
        d = int(np.log2(n))
        if 2 ** d != n:
            raise ValueError("table must have 2^d rows")
        _check_rows(rows, k)
        super().__init__(k, domain=domain)
        self.d = d
        self.table = rows

    def predict_bits(self, bits):
        bits = np.asarray(bits, dtype=np.float64)
        idx = (bits >= 0.5).astype(np.int64) @ (1 << np.arange(self.d - 1, -1, -1))
        return self.table[idx]


def encode_instance(instance):
    """Wire form: base64 P6 PPM for images, token list for text."""
    if isinstance(instance, np.ndarray):
        h, w = instance.shape[:2]
        header = b"P6\n%d %d\n255\n" % (w, h)
        return base64.b64encode(header + instance.astype(np.uint8).tobytes()).decode("ascii")
    return list(instance)


class RemoteBlackBox(BlackBox):
    """HTTP client speaking the batch wire protocol.

    POST {"instances": [...]} -> {"probabilities": [[...], ...]}. Batches
    are capped (default 64) and may be issued concurrently; responses are
    reassembled in request order.
    """

    def __init__(self, url, class_count, batch_size=64, max_in_flight=1,
                 timeout=30.0, retries=2, session=None):
        super().__init__(class_count)
        self.url = url
        self.batch_size = batch_size
        self.max_in_flight = max(1, max_in_flight)
        self.timeout = timeout
        self.retries = retries
        self._session = session or requests.Session()

    def _post(self, payload):
        last_exc = None
        for attempt in range(1, self.retries + 2):
            try:
                resp = self._session.post(self.url, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if resp.status_code != 200:
                raise ProtocolError("endpoint returned HTTP %d" % resp.status_code)
            try:
                body = resp.json()
                return np.asarray(body["probabilities"], dtype=np.float64)
            except (ValueError, KeyError, TypeError) as exc:
                raise ProtocolError("malformed response body: %s" % exc)
        raise TransportError("endpoint unreachable: %s" % last_exc,
                             attempts=self.retries + 1)

    def predict_batch(self, instances):
        if len(instances) == 0:
            raise ValueError("empty batch")
        chunks = [instances[i:i + self.batch_size]
                  for i in range(0, len(instances), self.batch_size)]
        payloads = [{"instances": [encode_instance(x) for x in c]} for c in chunks]
        if self.max_in_flight > 1 and len(payloads) > 1:
            with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
                parts = list(pool.map(self._post, payloads))
        else:
            parts = [self._post(p) for p in payloads]
        for part, chunk in zip(parts, chunks):
            if part.ndim != 2 or part.shape[0] != len(chunk):
                raise ProtocolError("row count does not match batch size")
        rows = np.vstack(parts)
        _check_rows(rows, self.class_count)
        return rows


def predict_batch(bb, instances):
    return bb.predict_batch(instances)


def blackbox_from_descriptor(desc, domain=None):
    """Build a binding from a JSON-friendly descriptor."""
    kind = desc.get("type")
    if kind == "synthetic":
        spec = SyntheticSpec(kind=desc["kind"], d=desc["d"],
                             class_count=desc["class_count"], seed=desc["seed"])
        return make_synthetic(spec, domain=domain)
    if kind == "table":
        return TableBlackBox(desc["rows"], domain=domain)
    if kind == "remote":
        return RemoteBlackBox(desc["url"], class_count=desc["class_count"],
                              batch_size=desc.get("batch_size", 64),
                              max_in_flight=desc.get("max_in_flight", 1))
    raise ValueError("unknown black-box descriptor type %r" % (kind,))
