"""Generate the committed synthetic bundles under converter/fixtures/.

The real legacy bundles were written by Python 2's cPickle at protocol 2.
Python 3's pickler cannot reproduce that byte surface (py2 str opcodes,
old module paths), so this script emits the opcodes by hand: numpy
arrays via numpy.core.multiarray._reconstruct, CSR matrices via the
scipy.sparse.csr class with a state dict, neighbor maps via
collections.defaultdict, and raw payloads as py2 BINSTRINGs.

Three bundles are produced. "cora" and "pubmed" have contiguous test
indices; "citeseer" has the famous gaps in its test index range. Sizes
are tiny but the dtype and opcode variety matches the real files.

Run from the converter directory:  python3 tools/make_fixtures.py
"""

import hashlib
import struct
from pathlib import Path

import numpy as np

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


class P2Pickler:
    """Hand-rolled protocol-2 pickle writer for the structures we need."""

    def __init__(self):
        self.out = bytearray(b"\x80\x02")
        self.memo_count = 0

    def finish(self) -> bytes:
        self.out += b"."
        return bytes(self.out)

    def _put(self):
        if self.memo_count < 256:
            self.out += b"q" + bytes([self.memo_count])
        else:
            self.out += b"r" + struct.pack("<I", self.memo_count)
        self.memo_count += 1

    # primitives ------------------------------------------------------

    def none(self):
        self.out += b"N"

    def bool_(self, value):
        self.out += b"\x88" if value else b"\x89"

    def int_(self, value):
        if 0 <= value < 256:
            self.out += b"K" + bytes([value])
        elif 0 <= value < 65536:
            self.out += b"M" + struct.pack("<H", value)
        else:
            self.out += b"J" + struct.pack("<i", value)

    def pystr(self, raw: bytes):
        if len(raw) < 256:
            self.out += b"U" + bytes([len(raw)]) + raw
        else:
            self.out += b"T" + struct.pack("<I", len(raw)) + raw
        self._put()

    def global_(self, module: str, name: str):
        self.out += b"c" + module.encode("ascii") + b"\n" + name.encode("ascii") + b"\n"
        self._put()

    # containers ------------------------------------------------------

    def mark(self):
        self.out += b"("

    def tuple_(self):
        self.out += b"t"
        self._put()

    def tuple1(self):
        self.out += b"\x85"
        self._put()

    def tuple2(self):
        self.out += b"\x86"
        self._put()

    def tuple3(self):
        self.out += b"\x87"
        self._put()

    def empty_tuple(self):
        self.out += b")"

    def empty_list(self):
        self.out += b"]"
        self._put()

    def empty_dict(self):
        self.out += b"}"
        self._put()

    def appends(self):
        self.out += b"e"

    def setitems(self):
        self.out += b"u"

    def reduce(self):
        self.out += b"R"
        self._put()

    def newobj(self):
        self.out += b"\x81"
        self._put()

    def build(self):
        self.out += b"b"

    # numpy / scipy structures ---------------------------------------

    def dtype(self, code: str):
        self.global_("numpy", "dtype")
        self.pystr(code.encode("ascii"))
        self.int_(0)
        self.int_(1)
        self.tuple3()
        self.reduce()
        self.mark()
        self.int_(3)
        self.pystr(b"<")
        self.none()
        self.none()
        self.none()
        self.int_(-1)
        self.int_(-1)
        self.int_(0)
        self.tuple_()
        self.build()

    def ndarray(self, arr: np.ndarray):
        code = f"{arr.dtype.kind}{arr.dtype.itemsize}"
        arr = np.ascontiguousarray(arr)
        if arr.dtype.byteorder == ">":
            raise ValueError("write little-endian arrays only")
        self.global_("numpy.core.multiarray", "_reconstruct")
        self.global_("numpy", "ndarray")
        self.int_(0)
        self.tuple1()
        self.pystr(b"b")
        self.tuple3()
        self.reduce()
        self.mark()
        self.int_(1)
        self.mark()
        for dim in arr.shape:
            self.int_(dim)
        self.tuple_()
        self.dtype(code)
        self.bool_(False)
        self.pystr(arr.tobytes())
        self.tuple_()
        self.build()

    def csr(self, dense: np.ndarray, data_dtype: str, index_dtype: str):
        rows, cols = dense.shape
        indptr = [0]
        indices = []
        data = []
        for i in range(rows):
            for j in range(cols):
                if dense[i, j] != 0.0:
                    indices.append(j)
                    data.append(dense[i, j])
            indptr.append(len(indices))
        self.global_("scipy.sparse.csr", "csr_matrix")
        self.empty_tuple()
        self.newobj()
        self.empty_dict()
        self.mark()
        self.pystr(b"_shape")
        self.int_(rows)
        self.int_(cols)
        self.tuple2()
        self.pystr(b"maxprint")
        self.int_(50)
        self.pystr(b"indices")
        self.ndarray(np.asarray(indices, dtype=index_dtype))
        self.pystr(b"indptr")
        self.ndarray(np.asarray(indptr, dtype=index_dtype))
        self.pystr(b"data")
        self.ndarray(np.asarray(data, dtype=data_dtype))
        self.setitems()
        self.build()

    def defaultdict_of_lists(self, mapping):
        self.global_("collections", "defaultdict")
        self.global_("__builtin__", "list")
        self.tuple1()
        self.reduce()
        self.mark()
        for key, values in mapping.items():
            self.int_(key)
            self.empty_list()
            self.mark()
            for v in values:
                self.int_(v)
            self.appends()
        self.setitems()


def dump_csr(dense, data_dtype, index_dtype):
    p = P2Pickler()
    p.csr(dense, data_dtype, index_dtype)
    return p.finish()


def dump_ndarray(arr):
    p = P2Pickler()
    p.ndarray(arr)
    return p.finish()


def dump_graph(mapping):
    p = P2Pickler()
    p.defaultdict_of_lists(mapping)
    return p.finish()


def one_hot(classes, num_classes, dtype):
    out = np.zeros((len(classes), num_classes), dtype=dtype)
    out[np.arange(len(classes)), classes] = 1
    return out


def random_features(rng, rows, cols, density):
    mask = rng.random((rows, cols)) < density
    values = np.round(rng.uniform(0.1, 2.0, size=(rows, cols)), 2)
    return np.where(mask, values, 0.0)


def random_graph(rng, num_nodes, degree):
    """Neighbor lists over all nodes, both directions listed."""
    adj = {node: [] for node in range(num_nodes)}
    for node in range(num_nodes):
        for other in rng.choice(num_nodes, size=degree, replace=False):
            other = int(other)
            if other == node:
                continue
            if other not in adj[node]:
                adj[node].append(other)
            if node not in adj[other]:
                adj[other].append(node)
    return adj


def write_bundle(name, files):
    out_dir = FIXTURES / name
    out_dir.mkdir(parents=True, exist_ok=True)
    for suffix, payload in files.items():
        path = out_dir / f"ind.{name}.{suffix}"
        if isinstance(payload, str):
            path.write_text(payload, encoding="ascii")
        else:
            path.write_bytes(payload)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()[:16]
        print(f"{path.relative_to(FIXTURES.parent)}  {digest}  {path.stat().st_size}B")


def make_cora():
    rng = np.random.default_rng(101)
    n_allx, n_train, n_test = 20, 8, 10
    n_feat, n_classes = 6, 3
    n = n_allx + n_test

    node_class = [i % n_classes for i in range(n)]
    allx = random_features(rng, n_allx, n_feat, 0.3)
    tx = random_features(rng, n_test, n_feat, 0.3)
    test_index = list(rng.permutation(np.arange(n_allx, n)))
    test_index = [int(v) for v in test_index]

    graph = random_graph(rng, n, 2)
    graph[4].append(4)          # self loop, must be dropped
    graph[0].append(graph[0][0])  # duplicate neighbor entry
    graph[17] = graph[17] + [3] if 3 not in graph[17] else graph[17]
    if 17 in graph[3]:
        graph[3].remove(17)     # one-directional edge, must be symmetrized

    files = {
        "x": dump_csr(allx[:n_train], "<f4", "<i4"),
        "y": dump_ndarray(one_hot(node_class[:n_train], n_classes, "<i4")),
        "tx": dump_csr(tx, "<f4", "<i4"),
        "ty": dump_ndarray(one_hot([node_class[i] for i in test_index], n_classes, "<i4")),
        "allx": dump_csr(allx, "<f4", "<i4"),
        "ally": dump_ndarray(one_hot(node_class[:n_allx], n_classes, "<i4")),
        "graph": dump_graph(graph),
        "test.index": "".join(f"{v}\n" for v in test_index),
    }
    write_bundle("cora", files)


def make_citeseer():
    rng = np.random.default_rng(202)
    n_allx, n_train = 20, 8
    n_feat, n_classes = 6, 3
    gap_ids = {23, 26, 30}
    span_ids = [i for i in range(20, 32)]
    test_ids = [i for i in span_ids if i not in gap_ids]
    n = n_allx + len(span_ids)

    node_class = [i % n_classes for i in range(n)]
    allx = random_features(rng, n_allx, n_feat, 0.3)
    tx = random_features(rng, len(test_ids), n_feat, 0.3)
    test_index = [int(v) for v in rng.permutation(test_ids)]

    graph = random_graph(rng, n, 2)
    if 5 not in graph[23]:
        graph[23].append(5)     # gap nodes still appear in the citation graph
    if 23 not in graph[5]:
        graph[5].append(23)
    graph[26] = []              # and some are isolated
    graph[30] = []
    for node, neighbors in graph.items():
        graph[node] = [v for v in neighbors if v not in (26, 30)]
    graph[26] = []
    graph[30] = []

    ty_classes = [node_class[i] for i in test_index]
    files = {
        "x": dump_csr(allx[:n_train], "<f8", "<i4"),
        "y": dump_ndarray(one_hot(node_class[:n_train], n_classes, "<i4")),
        "tx": dump_csr(tx, "<f8", "<i4"),
        "ty": dump_ndarray(one_hot(ty_classes, n_classes, "<i4")),
        "allx": dump_csr(allx, "<f8", "<i4"),
        "ally": dump_ndarray(one_hot(node_class[:n_allx], n_classes, "<i4")),
        "graph": dump_graph(graph),
        "test.index": "".join(f"{v}\n" for v in test_index),
    }
    write_bundle("citeseer", files)


def make_pubmed():
    rng = np.random.default_rng(303)
    n_allx, n_train, n_test = 24, 9, 12
    n_feat, n_classes = 5, 3
    n = n_allx + n_test

    node_class = [i % n_classes for i in range(n)]
    allx = random_features(rng, n_allx, n_feat, 0.8)
    tx = random_features(rng, n_test, n_feat, 0.8)
    test_index = [int(v) for v in rng.permutation(np.arange(n_allx, n))]

    graph = random_graph(rng, n, 3)

    files = {
        "x": dump_csr(allx[:n_train], "<f4", "<i8"),
        "y": dump_ndarray(one_hot(node_class[:n_train], n_classes, "|u1")),
        "tx": dump_csr(tx, "<f4", "<i8"),
        "ty": dump_ndarray(one_hot([node_class[i] for i in test_index], n_classes, "<f8")),
        "allx": dump_csr(allx, "<f4", "<i8"),
        "ally": dump_ndarray(one_hot(node_class[:n_allx], n_classes, "<f8")),
        "graph": dump_graph(graph),
        "test.index": "".join(f"{v}\n" for v in test_index),
    }
    write_bundle("pubmed", files)


if __name__ == "__main__":
    make_cora()
    make_citeseer()
    make_pubmed()
