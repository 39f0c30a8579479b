"""Stateful HTTP service: sessions pair one explained instance with a
black-box binding and fitted surrogates, persisted as a directory of JSON
artifacts plus raw media so every answer is auditable.

Within a session, reads run concurrently while fit and segmentation
updates are exclusive (busy requests get 409). Rendered occlusions are
cached by bitstring.
"""

import base64
import io
import json
import threading
import time
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from PIL import Image

from . import explain as ex
from .blackbox import blackbox_from_descriptor
from .domain import (InterpretableDomain, OcclusionStrategy, Segmentation,
                     build_grid_segmentation, merge_segments)
from .errors import (CapacityError, LimetreeError, ProtocolError,
                     TransportError, UnsupportedInstanceError)
from .guarantees import fit_complete, relabel_leaves, verify_fidelity
from .ridge import lime_explain
from .sampling import ENUMERATION_BUDGET, enumeration_sample
from .tree import fit_limetree, tree_from_json, tree_to_json

VARIANT_PREFERENCE = ["complete", "relabel", "limet"]


class SessionBusy(Exception):
    pass


class Session:
    def __init__(self, sid, domain, descriptor, created=None, base_domain=None):
        self.id = sid
        self.domain = domain
        # the black box stays bound to the original segmentation: merged
        # occlusions are still decodable there (a merged segment hides all
        # of its original members at once), while the descriptor's bit
        # space never changes
        self.base_domain = base_domain or domain
        self.descriptor = descriptor
        self.bb = blackbox_from_descriptor(descriptor, domain=self.base_domain)
        self.trees = {}
        self.reports = {}
        self.created = created or time.time()
        self.updated = self.created
        self.lock = threading.Lock()

    def pick_tree(self, variant=None):
        if variant:
            if variant not in self.trees:
                raise ValueError("variant %r not fitted" % variant)
            return variant, self.trees[variant]
        for v in VARIANT_PREFERENCE:
            if v in self.trees:
                return v, self.trees[v]
        raise ValueError("session has no fitted surrogate")

    def default_oracle(self, variant):
        return "tree" if variant == "complete" else "blackbox"


class SessionStore:
    """Directory-per-session persistence; JSON artifacts plus media."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._cache = {}
        self._store_lock = threading.Lock()

    def _dir(self, sid):
        return self.root / sid

    def create(self, domain, descriptor):
        sid = uuid.uuid4().hex[:12]
        session = Session(sid, domain, descriptor)
        self._persist(session)
        with self._store_lock:
            self._cache[sid] = session
        return session

    def get(self, sid):
        with self._store_lock:
            if sid in self._cache:
                return self._cache[sid]
        session = self._load(sid)
        if session is not None:
            with self._store_lock:
                self._cache.setdefault(sid, session)
                session = self._cache[sid]
        return session

    def _persist(self, session):
        sdir = self._dir(session.id)
        sdir.mkdir(parents=True, exist_ok=True)
        (sdir / "renders").mkdir(exist_ok=True)
        domain = session.domain
        doc = {
            "id": session.id,
            "created": session.created,
            "updated": session.updated,
            "descriptor": session.descriptor,
            "domain": domain.to_json(),
        }
        if domain.kind == "image":
            doc["labels"] = domain.segmentation.labels.tolist()
            doc["base_labels"] = session.base_domain.segmentation.labels.tolist()
            doc["merge_history"] = domain.merge_history
            Image.fromarray(domain.anchor).save(sdir / "anchor.png")
        (sdir / "session.json").write_text(json.dumps(doc, sort_keys=True))
        trees = {v: tree_to_json(t) for v, t in session.trees.items()}
        (sdir / "trees.json").write_text(json.dumps(trees, sort_keys=True))
        (sdir / "reports.json").write_text(json.dumps(session.reports,
                                                      sort_keys=True))

    def _load(self, sid):
        sdir = self._dir(sid)
        meta_path = sdir / "session.json"
        if not meta_path.exists():
            return None
        doc = json.loads(meta_path.read_text())
        dj = doc["domain"]
        base_domain = None
        if dj["kind"] == "image":
            anchor = np.asarray(Image.open(sdir / "anchor.png").convert("RGB"),
                                dtype=np.uint8)
            occ = OcclusionStrategy(kind=dj["occlusion"]["kind"],
                                    rgb=tuple(dj["occlusion"]["rgb"]))
            base_labels = np.asarray(doc.get("base_labels", doc["labels"]),
                                     dtype=np.int32)
            base_seg = Segmentation(labels=base_labels,
                                    d=int(base_labels.max()) + 1)
            base_domain = InterpretableDomain.for_image(anchor, base_seg, occ)
            seg = base_seg
            history = doc.get("merge_history") or []
            for groups in history:
                seg = merge_segments(seg, [set(g) for g in groups])
            domain = InterpretableDomain.for_image(
                anchor, seg, occ, merge_history=history)
        else:
            domain = InterpretableDomain.for_text(
                None, tokens=dj["tokens"], merge_history=dj.get("merge_history"))
        session = Session(sid, domain, doc["descriptor"], created=doc["created"],
                          base_domain=base_domain)
        session.updated = doc["updated"]
        trees = json.loads((sdir / "trees.json").read_text())
        session.trees = {v: tree_from_json(t) for v, t in trees.items()}
        session.reports = json.loads((sdir / "reports.json").read_text())
        return session

    def save(self, session):
        session.updated = time.time()
        self._persist(session)

    def render_path(self, session, bits):
        return self._dir(session.id) / "renders" / ("%s.png" % bits)


def _decode_b64_image(data):
    raw = base64.b64decode(data)
    img = Image.open(io.BytesIO(raw)).convert("RGB")
    return np.asarray(img, dtype=np.uint8)


def _parse_point(value, d):
    if isinstance(value, str):
        if len(value) != d or any(c not in "01" for c in value):
            raise ValueError("bitstring must be %d characters of 0/1" % d)
        return np.array([int(c) for c in value], dtype=np.uint8)
    arr = np.asarray(value, dtype=np.uint8)
    if arr.shape != (d,):
        raise ValueError("point must have length %d" % d)
    return arr


def _bits_str(point):
    return "".join(str(int(b)) for b in point)


def create_app(store_dir):
    app = FastAPI(title="limetree service")
    store = SessionStore(store_dir)
    app.state.store = store

    @app.exception_handler(ValueError)
    async def _bad_request(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(CapacityError)
    async def _capacity(request: Request, exc: CapacityError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(UnsupportedInstanceError)
    async def _unsupported(request: Request, exc: UnsupportedInstanceError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(SessionBusy)
    async def _busy(request: Request, exc: SessionBusy):
        return JSONResponse(status_code=409, content={"error": "fit or merge in flight"})

    @app.exception_handler(TransportError)
    async def _transport(request: Request, exc: TransportError):
        return JSONResponse(status_code=502,
                            content={"error": str(exc), "attempts": exc.attempts})

    @app.exception_handler(ProtocolError)
    async def _protocol(request: Request, exc: ProtocolError):
        return JSONResponse(status_code=502, content={"error": str(exc)})

    @app.exception_handler(LimetreeError)
    async def _generic(request: Request, exc: LimetreeError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    def _session_or_404(sid):
        session = store.get(sid)
        if session is None:
            return None
        return session

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await request.json()
        descriptor = body.get("blackbox")
        if not descriptor:
            raise ValueError("missing black-box descriptor")
        if "text" in body:
            domain = InterpretableDomain.for_text(body["text"],
                                                  tokens=body.get("tokens"))
        elif "image" in body:
            anchor = _decode_b64_image(body["image"])
            if "mask" in body:
                mask_img = Image.open(io.BytesIO(base64.b64decode(body["mask"])))
                if mask_img.mode not in ("L", "I", "I;16"):
                    mask_img = mask_img.convert("I")
                labels = np.asarray(mask_img, dtype=np.int32)
                seg = Segmentation(labels=labels, d=int(labels.max()) + 1)
            elif "grid" in body:
                g = body["grid"]
                seg = build_grid_segmentation(anchor.shape[1], anchor.shape[0],
                                              g["rows"], g["cols"])
            else:
                raise ValueError("image sessions need a mask or grid spec")
            occ = OcclusionStrategy(**body["occlusion"]) if "occlusion" in body \
                else OcclusionStrategy()
            domain = InterpretableDomain.for_image(anchor, seg, occ)
        else:
            raise ValueError("provide an image or text instance")
        # validate the descriptor resolves before persisting
        blackbox_from_descriptor(descriptor, domain=domain)
        session = store.create(domain, descriptor)
        return {"id": session.id, "d": session.domain.d}

    @app.post("/demo")
    async def create_demo():
        """Bundled d=3 demo: class 1 is argmax exactly when segment 0 is
        occluded; used by the UI walkthrough and its tests."""
        rng = np.random.default_rng(7)
        colors = rng.integers(40, 256, size=(3, 3)).astype(np.uint8)
        anchor = np.repeat(np.repeat(colors[None, :, :], 8, axis=0), 8, axis=1)
        seg = build_grid_segmentation(24, 8, 1, 3)
        domain = InterpretableDomain.for_image(anchor, seg)
        rows = []
        for idx in range(8):
            bits = [(idx >> (2 - j)) & 1 for j in range(3)]
            if bits[0] == 0:
                rows.append([0.15, 0.7, 0.15])
            else:
                rows.append([0.6, 0.25, 0.15])
        descriptor = {"type": "table", "rows": rows}
        session = store.create(domain, descriptor)
        return {"id": session.id, "d": session.domain.d}

    @app.get("/sessions/{sid}")
    async def get_session(sid: str):
        session = _session_or_404(sid)
        if session is None:
            return JSONResponse(status_code=404, content={"error": "no such session"})
        doc = {
            "id": session.id,
            "d": session.domain.d,
            "kind": session.domain.kind,
            "domain": session.domain.to_json(),
            "blackbox": session.descriptor,
            "variants": sorted(session.trees),
            "reports": session.reports,
            "created": session.created,
            "updated": session.updated,
        }
        if session.domain.kind == "image":
            doc["labels"] = session.domain.segmentation.labels.tolist()
        return doc

    @app.put("/sessions/{sid}/segmentation")
    async def update_segmentation(sid: str, request: Request):
        session = _session_or_404(sid)
        if session is None:
            return JSONResponse(status_code=404, content={"error": "no such session"})
        body = await request.json()
        groups = [set(g) for g in body.get("merge", [])]
        if not session.lock.acquire(blocking=False):
            raise SessionBusy()
        try:
            if not groups or all(len(g) <= 1 for g in groups):
                return {"d": session.domain.d, "invalidated": False}
            if session.domain.kind != "image":
                raise ValueError("merging applies to image segmentations")
            new_seg = merge_segments(session.domain.segmentation, groups)
            history = session.domain.merge_history + [
                sorted(sorted(g) for g in groups)]
            # invalidate before the new domain is visible
            session.trees = {}
            session.reports = {}
            session.domain = InterpretableDomain.for_image(
                session.domain.anchor, new_seg, session.domain.occlusion,
                merge_history=history)
            for cached in store.render_path(session, "x").parent.glob("*.png"):
                cached.unlink()
            store.save(session)
            return {"d": session.domain.d, "invalidated": True}
        finally:
            session.lock.release()

    @app.post("/sessions/{sid}/fit")
    async def fit(sid: str, request: Request):
        session = _session_or_404(sid)
        if session is None:
            return JSONResponse(status_code=404, content={"error": "no such session"})
        body = await request.json()
        epsilon = float(body.get("epsilon", 0.95))
        variants = body.get("variants", ["limet", "relabel", "complete", "lime"])
        kernel_width = float(body.get("kernel_width", 0.25))
        if not session.lock.acquire(blocking=False):
            raise SessionBusy()
        try:
            domain, bb = session.domain, session.bb
            sample = enumeration_sample(domain.d, kernel_width)
            anchor_row = bb.predict_batch([domain.anchor])[0]
            if isinstance(body.get("classes"), list):
                classes = [int(c) for c in body["classes"]]
            else:
                top = int(body.get("classes", min(3, bb.class_count)))
                classes = list(np.argsort(-anchor_row, kind="stable")[:top])
            classes = [int(c) for c in classes]
            for c in classes:
                if not (0 <= c < bb.class_count):
                    raise ValueError("class %d out of range" % c)

            trees, reports = {}, {}
            tree, report = fit_limetree(bb, domain, sample, classes, epsilon)
            if "limet" in variants:
                trees["limet"] = tree
                reports["limet"] = report.to_json()
            if "relabel" in variants:
                rel = relabel_leaves(tree, bb, domain)
                trees["relabel"] = rel
                rep = verify_fidelity(rel, bb, domain, "minimal-set")
                reports["relabel"] = rep.to_json()
            if "complete" in variants and 2 ** domain.d <= ENUMERATION_BUDGET:
                star = fit_complete(bb, domain, classes)
                trees["complete"] = star
                rep = verify_fidelity(star, bb, domain, "full-enumeration")
                reports["complete"] = rep.to_json()
            if "lime" in variants:
                reports["lime"] = lime_explain(bb, domain, sample, classes).to_json()
            session.trees = trees
            session.reports = {
                "classes": classes,
                "anchor_probabilities": [float(v) for v in anchor_row],
                "variants": reports,
            }
            store.save(session)
            return session.reports
        finally:
            session.lock.release()

    @app.post("/sessions/{sid}/query")
    async def query(sid: str, request: Request):
        session = _session_or_404(sid)
        if session is None:
            return JSONResponse(status_code=404, content={"error": "no such session"})
        body = await request.json()
        if not session.trees:
            raise ValueError("session has no fitted surrogate; call fit first")
        return _dispatch_query(session, body)

    @app.get("/sessions/{sid}/tree")
    async def tree_doc(sid: str, variant: str = None):
        session = _session_or_404(sid)
        if session is None:
            return JSONResponse(status_code=404, content={"error": "no such session"})
        if not session.trees:
            raise ValueError("session has no fitted surrogate; call fit first")
        name, tree = session.pick_tree(variant)
        doc = ex.render_tree(tree, session.domain)
        doc["variant"] = name
        for node in doc["nodes"]:
            if node["kind"] == "leaf":
                node["thumbnail"] = "/sessions/%s/render/%s.png" % (
                    session.id, node["thumbnail"])
        return doc

    @app.get("/sessions/{sid}/render/{bits}.png")
    async def render(sid: str, bits: str):
        session = _session_or_404(sid)
        if session is None:
            return JSONResponse(status_code=404, content={"error": "no such session"})
        if session.domain.kind != "image":
            raise ValueError("render endpoint applies to image sessions")
        point = _parse_point(bits, session.domain.d)
        path = store.render_path(session, bits)
        if not path.exists():
            img = session.domain.from_interpretable(point)
            Image.fromarray(img).save(path)
        return Response(content=path.read_bytes(), media_type="image/png")

    def _dispatch_query(session, body):
        kind = body.get("kind")
        domain, bb = session.domain, session.bb
        variant, tree = session.pick_tree(body.get("variant"))
        d = domain.d

        if kind == "importance":
            imp = ex.feature_importance(tree)
            return {"kind": kind, "variant": variant,
                    "importance": [float(v) for v in imp],
                    "no_splits": bool(imp.sum() == 0.0)}

        if kind == "rule":
            if "leaf" in body:
                leaf = int(body["leaf"])
            else:
                leaf = int(tree.route(_parse_point(body["point"], d))[0])
            rule = ex.extract_rule(tree, leaf)
            doc = rule.to_json()
            doc.update({"kind": kind, "variant": variant,
                        "visual": "/sessions/%s/render/%s.png"
                                  % (session.id, _bits_str(rule.minimal))})
            return doc

        if kind == "exemplars":
            point = _parse_point(body.get("point", "1" * d), d)
            leaf = int(tree.route(point)[0])
            result = ex.exemplars(tree, leaf, int(body.get("radius", 1)),
                                  body.get("class_filter", "any"))
            doc = result.to_json()
            doc.update({"kind": kind, "variant": variant})
            return doc

        if kind == "what_if":
            point = _parse_point(body["point"], d)
            oracle = body.get("oracle") or session.default_oracle(variant)
            result = ex.what_if(point, oracle, tree=tree, bb=bb, domain=domain)
            doc = result.to_json()
            doc.update({"kind": kind, "variant": variant,
                        "classes": list(tree.classes),
                        "render": "/sessions/%s/render/%s.png"
                                  % (session.id, _bits_str(point))})
            return doc

        if kind == "counterfactual":
            target = body["target"]
            ttype = target["type"]
            if ttype == "prob_at_least":
                tgt = ("prob_at_least", int(target["class"]),
                       float(target["threshold"]))
            else:
                tgt = (ttype, int(target["class"]))
            query = ex.CounterfactualQuery(
                target=tgt,
                reference=_parse_point(body["reference"], d)
                if "reference" in body else None,
                given={int(k): int(v) for k, v in body.get("given", {}).items()},
                despite=set(int(f) for f in body.get("despite", [])),
                oracle=body.get("oracle") or session.default_oracle(variant),
            )
            result = ex.counterfactual(query, tree, domain, bb)
            doc = result.to_json()
            doc.update({
                "kind": kind, "variant": variant,
                "impossible": result.impossible,
                "renders": ["/sessions/%s/render/%s.png"
                            % (session.id, _bits_str(p)) for p in result.points],
            })
            return doc

        if kind == "shortest":
            oracle = body.get("oracle") or session.default_oracle(variant)
            length, points = ex.shortest_explanation(
                int(body["class"]), tree, domain, bb, oracle)
            return {"kind": kind, "variant": variant,
                    "length": length,
                    "points": [[int(b) for b in p] for p in points],
                    "renders": ["/sessions/%s/render/%s.png"
                                % (session.id, _bits_str(p)) for p in points]}

        if kind == "tree":
            doc = ex.render_tree(tree, domain)
            doc.update({"kind": kind, "variant": variant})
            return doc

        raise ValueError("unknown query kind %r" % (kind,))

    return app
