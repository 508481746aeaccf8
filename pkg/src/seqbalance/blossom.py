"""Maximum-weight matching on general graphs (Edmonds' blossom algorithm).

Primal-dual implementation in the O(n^3) style of Galil (1986), run in
maximum-cardinality mode. Weights are Python integers, so tightness tests
are exact; when a blossom-dual step would need a half unit, every weight and
dual is doubled instead.

The solver accepts a warm start: a partial matching plus vertex duals that
are feasible on every edge and tight on the matched ones. It returns the
final duals so callers can certify optimality against edges the solver
never saw.

Slacks use the doubled convention ``slack(i, j) = y_i + y_j - 2 w_ij +
2 * sum(z_B for blossoms B holding both ends)``.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class BlossomResult:
    mate: list[int]
    """``mate[v]`` is the vertex matched to ``v``, or -1."""
    vertex_dual: list[int]
    blossoms: list[tuple[list[int], int]]
    """Leaves and dual of every nontrivial blossom alive at the end."""
    scale: int
    """Factor by which weights were multiplied during the run."""


class _Matcher:
    def __init__(self, n, edges, init_mate=None, init_dual=None):
        self.n = n
        self.edges = [(int(i), int(j)) for i, j, _ in edges]
        self.wt2 = [2 * int(w) for _, _, w in edges]
        self.scale = 1
        m = len(self.edges)
        self.endpoint = [self.edges[p >> 1][p & 1] for p in range(2 * m)]
        self.neighbend = [[] for _ in range(n)]
        for k, (i, j) in enumerate(self.edges):
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            self.neighbend[i].append(2 * k + 1)
            self.neighbend[j].append(2 * k)

        self.mate = [-1] * n
        self.label = [0] * (2 * n)
        self.labelend = [-1] * (2 * n)
        self.inblossom = list(range(n))
        self.blossomparent = [-1] * (2 * n)
        self.blossomchilds = [None] * (2 * n)
        self.blossombase = list(range(n)) + [-1] * n
        self.blossomendps = [None] * (2 * n)
        self.bestedge = [-1] * (2 * n)
        self.blossombestedges = [None] * (2 * n)
        self.unusedblossoms = list(range(n, 2 * n))
        maxw = max([w // 2 for w in self.wt2], default=0)
        self.dualvar = [maxw] * n + [0] * n
        self.allowedge = [False] * m
        self.queue = []

        if init_dual is not None:
            for v in range(n):
                self.dualvar[v] = int(init_dual[v])
        if init_mate is not None:
            pos = {}
            for k, (i, j) in enumerate(self.edges):
                pos[(i, j)] = 2 * k + 1
                pos[(j, i)] = 2 * k
            for v, u in enumerate(init_mate):
                if u >= 0:
                    p = pos[(v, u)]
                    self.mate[v] = p
                    if self.slack(p >> 1) != 0:
                        raise ValueError(f"warm-start edge ({v}, {u}) is not tight")

    # -- helpers ---------------------------------------------------------

    def slack(self, k):
        i, j = self.edges[k]
        return self.dualvar[i] + self.dualvar[j] - self.wt2[k]

    def _double(self):
        self.scale *= 2
        self.wt2 = [2 * w for w in self.wt2]
        self.dualvar = [2 * y for y in self.dualvar]

    def leaves(self, b):
        if b < self.n:
            yield b
        else:
            for t in self.blossomchilds[b]:
                if t < self.n:
                    yield t
                else:
                    yield from self.leaves(t)

    def assign_label(self, w, t, p):
        b = self.inblossom[w]
        self.label[w] = self.label[b] = t
        self.labelend[w] = self.labelend[b] = p
        self.bestedge[w] = self.bestedge[b] = -1
        if t == 1:
            self.queue.extend(self.leaves(b))
        elif t == 2:
            base = self.blossombase[b]
            mp = self.mate[base]
            self.assign_label(self.endpoint[mp], 1, mp ^ 1)

    def scan_blossom(self, v, w):
        """Trace back from v and w; return the common base or -1 on an augmenting path."""
        path = []
        base = -1
        while v != -1 or w != -1:
            b = self.inblossom[v]
            if self.label[b] & 4:
                base = self.blossombase[b]
                break
            path.append(b)
            self.label[b] = 5
            if self.labelend[b] == -1:
                v = -1
            else:
                v = self.endpoint[self.labelend[b]]
                b = self.inblossom[v]
                v = self.endpoint[self.labelend[b]]
            if w != -1:
                v, w = w, v
        for b in path:
            self.label[b] = 1
        return base

    def add_blossom(self, base, k):
        v, w = self.edges[k]
        inb = self.inblossom
        bb, bv, bw = inb[base], inb[v], inb[w]
        b = self.unusedblossoms.pop()
        self.blossombase[b] = base
        self.blossomparent[b] = -1
        self.blossomparent[bb] = b
        path = self.blossomchilds[b] = []
        endps = self.blossomendps[b] = []
        while bv != bb:
            self.blossomparent[bv] = b
            path.append(bv)
            endps.append(self.labelend[bv])
            v = self.endpoint[self.labelend[bv]]
            bv = inb[v]
        path.append(bb)
        path.reverse()
        endps.reverse()
        endps.append(2 * k)
        while bw != bb:
            self.blossomparent[bw] = b
            path.append(bw)
            endps.append(self.labelend[bw] ^ 1)
            w = self.endpoint[self.labelend[bw]]
            bw = inb[w]
        self.label[b] = 1
        self.labelend[b] = self.labelend[bb]
        self.dualvar[b] = 0
        for x in self.leaves(b):
            if self.label[inb[x]] == 2:
                self.queue.append(x)
            inb[x] = b
        bestedgeto = {}
        for sub in path:
            if self.blossombestedges[sub] is None:
                nblists = [[p >> 1 for p in self.neighbend[x]] for x in self.leaves(sub)]
            else:
                nblists = [self.blossombestedges[sub]]
            for nblist in nblists:
                for kk in nblist:
                    i, j = self.edges[kk]
                    if inb[j] == b:
                        i, j = j, i
                    bj = inb[j]
                    if bj != b and self.label[bj] == 1:
                        cur = bestedgeto.get(bj)
                        if cur is None or self.slack(kk) < self.slack(cur):
                            bestedgeto[bj] = kk
            self.blossombestedges[sub] = None
            self.bestedge[sub] = -1
        self.blossombestedges[b] = list(bestedgeto.values())
        best = -1
        for kk in self.blossombestedges[b]:
            if best == -1 or self.slack(kk) < self.slack(best):
                best = kk
        self.bestedge[b] = best

    def expand_blossom(self, b, endstage):
        n = self.n
        for s in self.blossomchilds[b]:
            self.blossomparent[s] = -1
            if s < n:
                self.inblossom[s] = s
            elif endstage and self.dualvar[s] == 0:
                self.expand_blossom(s, endstage)
            else:
                for x in self.leaves(s):
                    self.inblossom[x] = s
        if not endstage and self.label[b] == 2:
            childs = self.blossomchilds[b]
            endps = self.blossomendps[b]
            entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]]
            j = childs.index(entrychild)
            if j & 1:
                j -= len(childs)
                jstep, endptrick = 1, 0
            else:
                jstep, endptrick = -1, 1
            p = self.labelend[b]
            while j != 0:
                self.label[self.endpoint[p ^ 1]] = 0
                self.label[self.endpoint[endps[j - endptrick] ^ endptrick ^ 1]] = 0
                self.assign_label(self.endpoint[p ^ 1], 2, p)
                self.allowedge[endps[j - endptrick] >> 1] = True
                j += jstep
                p = endps[j - endptrick] ^ endptrick
                self.allowedge[p >> 1] = True
                j += jstep
            bv = childs[j]
            self.label[self.endpoint[p ^ 1]] = self.label[bv] = 2
            self.labelend[self.endpoint[p ^ 1]] = self.labelend[bv] = p
            self.bestedge[bv] = -1
            j += jstep
            while childs[j] != entrychild:
                bv = childs[j]
                if self.label[bv] == 1:
                    j += jstep
                    continue
                labelled = None
                for x in self.leaves(bv):
                    if self.label[x] != 0:
                        labelled = x
                        break
                if labelled is not None:
                    self.label[labelled] = 0
                    self.label[self.endpoint[self.mate[self.blossombase[bv]]]] = 0
                    self.assign_label(labelled, 2, self.labelend[labelled])
                j += jstep
        self.label[b] = self.labelend[b] = -1
        self.blossomchilds[b] = self.blossomendps[b] = None
        self.blossombase[b] = -1
        self.blossombestedges[b] = None
        self.bestedge[b] = -1
        self.unusedblossoms.append(b)

    def augment_blossom(self, b, v):
        t = v
        while self.blossomparent[t] != b:
            t = self.blossomparent[t]
        if t >= self.n:
            self.augment_blossom(t, v)
        childs = self.blossomchilds[b]
        endps = self.blossomendps[b]
        i = j = childs.index(t)
        if i & 1:
            j -= len(childs)
            jstep, endptrick = 1, 0
        else:
            jstep, endptrick = -1, 1
        while j != 0:
            j += jstep
            t = childs[j]
            p = endps[j - endptrick] ^ endptrick
            if t >= self.n:
                self.augment_blossom(t, self.endpoint[p])
            j += jstep
            t = childs[j]
            if t >= self.n:
                self.augment_blossom(t, self.endpoint[p ^ 1])
            self.mate[self.endpoint[p]] = p ^ 1
            self.mate[self.endpoint[p ^ 1]] = p
        self.blossomchilds[b] = childs[i:] + childs[:i]
        self.blossomendps[b] = endps[i:] + endps[:i]
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]]

    def augment_matching(self, k):
        v, w = self.edges[k]
        for s, p in ((v, 2 * k + 1), (w, 2 * k)):
            while True:
                bs = self.inblossom[s]
                if bs >= self.n:
                    self.augment_blossom(bs, s)
                self.mate[s] = p
                if self.labelend[bs] == -1:
                    break
                t = self.endpoint[self.labelend[bs]]
                bt = self.inblossom[t]
                s = self.endpoint[self.labelend[bt]]
                j = self.endpoint[self.labelend[bt] ^ 1]
                if bt >= self.n:
                    self.augment_blossom(bt, j)
                self.mate[j] = self.labelend[bt]
                p = self.labelend[bt] ^ 1

    # -- main loop -------------------------------------------------------

    def run(self):
        n = self.n
        label, inb = self.label, self.inblossom
        for _ in range(n):
            if all(mv != -1 for mv in self.mate):
                break
            for i in range(2 * n):
                label[i] = 0
                self.bestedge[i] = -1
            for i in range(n, 2 * n):
                self.blossombestedges[i] = None
            self.allowedge = [False] * len(self.edges)
            self.queue = []
            for v in range(n):
                if self.mate[v] == -1 and label[inb[v]] == 0:
                    self.assign_label(v, 1, -1)
            augmented = False
            while True:
                while self.queue and not augmented:
                    v = self.queue.pop()
                    for p in self.neighbend[v]:
                        k = p >> 1
                        w = self.endpoint[p]
                        if inb[v] == inb[w]:
                            continue
                        kslack = None
                        if not self.allowedge[k]:
                            kslack = self.slack(k)
                            if kslack <= 0:
                                self.allowedge[k] = True
                        if self.allowedge[k]:
                            if label[inb[w]] == 0:
                                self.assign_label(w, 2, p ^ 1)
                            elif label[inb[w]] == 1:
                                base = self.scan_blossom(v, w)
                                if base >= 0:
                                    self.add_blossom(base, k)
                                else:
                                    self.augment_matching(k)
                                    augmented = True
                                    break
                            elif label[w] == 0:
                                label[w] = 2
                                self.labelend[w] = p ^ 1
                        elif label[inb[w]] == 1:
                            b = inb[v]
                            if self.bestedge[b] == -1 or kslack < self.slack(self.bestedge[b]):
                                self.bestedge[b] = k
                        elif label[w] == 0:
                            if self.bestedge[w] == -1 or kslack < self.slack(self.bestedge[w]):
                                self.bestedge[w] = k
                if augmented:
                    break

                deltatype = -1
                delta = deltaedge = deltablossom = None
                for v in range(n):
                    if label[inb[v]] == 0 and self.bestedge[v] != -1:
                        d = self.slack(self.bestedge[v])
                        if deltatype == -1 or d < delta:
                            delta, deltatype, deltaedge = d, 2, self.bestedge[v]
                for b in range(2 * n):
                    if self.blossomparent[b] == -1 and label[b] == 1 and self.bestedge[b] != -1:
                        kslack = self.slack(self.bestedge[b])
                        if kslack & 1:
                            self._double()
                            kslack *= 2
                            if delta is not None:
                                delta *= 2
                        d = kslack // 2
                        if deltatype == -1 or d < delta:
                            delta, deltatype, deltaedge = d, 3, self.bestedge[b]
                for b in range(n, 2 * n):
                    if (
                        self.blossombase[b] >= 0
                        and self.blossomparent[b] == -1
                        and label[b] == 2
                        and (deltatype == -1 or self.dualvar[b] < delta)
                    ):
                        delta, deltatype, deltablossom = self.dualvar[b], 4, b
                if deltatype == -1:
                    # maximum cardinality reached on this graph
                    break

                for v in range(n):
                    lv = label[inb[v]]
                    if lv == 1:
                        self.dualvar[v] -= delta
                    elif lv == 2:
                        self.dualvar[v] += delta
                for b in range(n, 2 * n):
                    if self.blossombase[b] >= 0 and self.blossomparent[b] == -1:
                        if label[b] == 1:
                            self.dualvar[b] += delta
                        elif label[b] == 2:
                            self.dualvar[b] -= delta

                if deltatype == 2:
                    self.allowedge[deltaedge] = True
                    i, j = self.edges[deltaedge]
                    if label[inb[i]] == 0:
                        i, j = j, i
                    self.queue.append(i)
                elif deltatype == 3:
                    self.allowedge[deltaedge] = True
                    i, j = self.edges[deltaedge]
                    self.queue.append(i)
                else:
                    self.expand_blossom(deltablossom, False)

            if not augmented:
                break
            for b in range(n, 2 * n):
                if (
                    self.blossomparent[b] == -1
                    and self.blossombase[b] >= 0
                    and label[b] == 1
                    and self.dualvar[b] == 0
                ):
                    self.expand_blossom(b, True)

        mate = [self.endpoint[p] if p >= 0 else -1 for p in self.mate]
        blossoms = [
            (list(self.leaves(b)), self.dualvar[b])
            for b in range(n, 2 * n)
            if self.blossombase[b] >= 0
        ]
        return BlossomResult(mate, self.dualvar[:n], blossoms, self.scale)


def max_weight_matching(n, edges, init_mate=None, init_dual=None) -> BlossomResult:
    """Maximum-weight maximum-cardinality matching.

    ``edges`` holds ``(i, j, w)`` with integer weights on vertices
    ``0..n-1``. An optional warm start is ``init_mate`` (vertex-to-vertex,
    -1 for free) together with ``init_dual`` in the doubled convention.
    Returned duals are multiplied by ``scale`` relative to the input
    weights.
    """
    return _Matcher(n, edges, init_mate, init_dual).run()
